//! Text file formats.
//!
//! * Embeddings (`PLDA-TXT 1 <d>`): one `<class_id>\t<v1> ... <vd>` row per
//!   vector.
//! * Models (`PLDA-MODEL 1 <d>`): `μ` on line 2, then `d` rows of `Φ_b` and
//!   `d` rows of `Φ_w`. Floats use 17 significant digits, so a write/read
//!   cycle is lossless and rewriting is byte-identical.
//! * Trials: `<enroll_class_id>\t<test_row_index>` with 0-based indices into
//!   the test embedding file.
//! * Covariance matrices: `d` whitespace-separated rows of `d` floats.
//!
//! Blank lines are ignored everywhere except inside a model file.

use std::fmt::Write as _;
use std::path::Path;

use crate::data_stats::LabeledDataset;
use crate::em_engine::{PldaModel, TrainReport};
use crate::error::{PldaError, Result};
use crate::spd_math::SymMatrix;

pub const EMBEDDING_MAGIC: &str = "PLDA-TXT";
pub const MODEL_MAGIC: &str = "PLDA-MODEL";
pub const FORMAT_VERSION: &str = "1";

pub fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| PldaError::Io { path: path.display().to_string(), source })
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| PldaError::Io { path: path.display().to_string(), source })
}

fn parse_error(source: &str, line: usize, message: impl Into<String>) -> PldaError {
    PldaError::Parse { path: source.to_owned(), line, message: message.into() }
}

fn parse_float(source: &str, line: usize, token: &str) -> Result<f64> {
    let v: f64 = token.parse().map_err(|_| parse_error(source, line, format!("invalid number `{token}`")))?;
    if !v.is_finite() {
        return Err(parse_error(source, line, format!("non-finite number `{token}`")));
    }
    Ok(v)
}

fn parse_row(source: &str, line: usize, text: &str, dim: usize) -> Result<Vec<f64>> {
    let row = text.split_whitespace().map(|t| parse_float(source, line, t)).collect::<Result<Vec<_>>>()?;
    if row.len() != dim {
        return Err(parse_error(source, line, format!("expected {dim} values, found {}", row.len())));
    }
    Ok(row)
}

/// Parses `<magic> <version> <dim>`.
fn parse_header(source: &str, line: Option<&str>, magic: &str) -> Result<usize> {
    let line = line.ok_or_else(|| parse_error(source, 1, "empty file"))?;
    let fields: Vec<&str> = line.split_whitespace().collect();
    match fields.as_slice() {
        [m, v, d] if *m == magic => {
            if *v != FORMAT_VERSION {
                return Err(parse_error(source, 1, format!("unsupported {magic} version `{v}`")));
            }
            match d.parse::<usize>() {
                Ok(dim) if dim >= 1 => Ok(dim),
                _ => Err(parse_error(source, 1, format!("invalid dimension `{d}`"))),
            }
        }
        _ => Err(parse_error(source, 1, format!("expected header `{magic} {FORMAT_VERSION} <dim>`"))),
    }
}

/// Parses embedding text; `source` names the input in error messages.
pub fn parse_embeddings(text: &str, source: &str) -> Result<LabeledDataset> {
    let mut lines = text.lines();
    let dim = parse_header(source, lines.next(), EMBEDDING_MAGIC)?;
    let mut data = LabeledDataset::new(dim);
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let (class_id, values) =
            line.split_once('\t').ok_or_else(|| parse_error(source, line_no, "expected `<class_id>\\t<values>`"))?;
        if class_id.is_empty() {
            return Err(parse_error(source, line_no, "empty class id"));
        }
        let row = parse_row(source, line_no, values, dim)?;
        data.push(class_id, &row)?;
    }
    Ok(data)
}

pub fn read_embeddings(path: &Path) -> Result<LabeledDataset> {
    parse_embeddings(&read_file(path)?, &path.display().to_string())
}

/// Serializes embeddings with shortest round-trip float formatting.
pub fn format_embeddings(data: &LabeledDataset) -> String {
    let mut out = format!("{EMBEDDING_MAGIC} {FORMAT_VERSION} {}\n", data.dim());
    for (class_id, v) in data.iter() {
        out.push_str(class_id);
        out.push('\t');
        push_joined(&mut out, v, |s, x| write!(s, "{x:?}"));
        out.push('\n');
    }
    out
}

fn push_joined(out: &mut String, values: &[f64], fmt: impl Fn(&mut String, f64) -> std::fmt::Result) {
    for (i, &v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        fmt(out, v).expect("writing to a String cannot fail");
    }
}

/// 17 significant digits.
fn write_exact(out: &mut String, v: f64) -> std::fmt::Result {
    write!(out, "{v:.16e}")
}

pub fn format_model(model: &PldaModel) -> String {
    let dim = model.dim();
    let mut out = format!("{MODEL_MAGIC} {FORMAT_VERSION} {dim}\n");
    push_joined(&mut out, model.mu(), write_exact);
    out.push('\n');
    for m in [model.phi_b(), model.phi_w()] {
        for i in 0..dim {
            push_joined(&mut out, m.row(i), write_exact);
            out.push('\n');
        }
    }
    out
}

pub fn parse_model(text: &str, source: &str) -> Result<PldaModel> {
    let mut lines = text.lines();
    let dim = parse_header(source, lines.next(), MODEL_MAGIC)?;
    let mut next_row = |line_no: usize| -> Result<Vec<f64>> {
        let line = lines.next().ok_or_else(|| parse_error(source, line_no, "unexpected end of model file"))?;
        parse_row(source, line_no, line, dim)
    };
    let mu = next_row(2)?;
    let mut read_matrix = |first_line: usize| -> Result<SymMatrix> {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            data.extend(next_row(first_line + i)?);
        }
        SymMatrix::from_row_major(dim, data).map_err(|e| parse_error(source, first_line, e.to_string()))
    };
    let phi_b = read_matrix(3)?;
    let phi_w = read_matrix(3 + dim)?;
    let trailing_line = 3 + 2 * dim;
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(parse_error(source, trailing_line, "trailing data after model"));
    }
    PldaModel::new(mu, phi_b, phi_w).map_err(|e| parse_error(source, 3, e.to_string()))
}

pub fn read_model(path: &Path) -> Result<PldaModel> {
    parse_model(&read_file(path)?, &path.display().to_string())
}

/// One trial: enrolled class against a test-file row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trial {
    pub enroll_id: String,
    pub test_index: usize,
    /// 1-based line in the trial file.
    pub line: usize,
}

/// Parses trials. Index range is checked later against the test file.
pub fn parse_trials(text: &str, source: &str) -> Result<Vec<Trial>> {
    let mut trials = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (enroll_id, index) = line
            .split_once('\t')
            .ok_or_else(|| parse_error(source, line_no, "expected `<enroll_id>\\t<test_index>`"))?;
        let index = index.trim();
        let test_index = index
            .parse::<usize>()
            .map_err(|_| parse_error(source, line_no, format!("invalid test index `{index}`")))?;
        trials.push(Trial { enroll_id: enroll_id.to_owned(), test_index, line: line_no });
    }
    Ok(trials)
}

/// `<enroll_id>\t<test_index>\t<llr>` with 9 significant digits.
pub fn format_score(trial: &Trial, llr: f64) -> String {
    format!("{}\t{}\t{llr:.8e}\n", trial.enroll_id, trial.test_index)
}

/// One `<iteration>\t<log_likelihood>` line per completed iteration.
pub fn format_report(report: &TrainReport) -> String {
    let mut out = String::new();
    for rec in &report.iterations {
        let _ = writeln!(out, "{}\t{:.16e}", rec.iteration, rec.log_likelihood);
    }
    out
}

pub fn parse_matrix(text: &str, source: &str) -> Result<SymMatrix> {
    let rows: Vec<(usize, &str)> =
        text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).map(|(i, l)| (i + 1, l)).collect();
    let dim = rows.len();
    if dim == 0 {
        return Err(parse_error(source, 1, "empty matrix file"));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for (line_no, line) in &rows {
        data.extend(parse_row(source, *line_no, line, dim)?);
    }
    SymMatrix::from_row_major(dim, data).map_err(|e| parse_error(source, 1, e.to_string()))
}

pub fn read_matrix(path: &Path) -> Result<SymMatrix> {
    parse_matrix(&read_file(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embeddings_parse_and_format() {
        let text = "PLDA-TXT 1 2\nspk a\t1.5 -2\n\nb\t0 3e-2\n";
        let data = parse_embeddings(text, "mem").unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!(data.label(0), "spk a");
        assert_eq!(data.vector(1), &[0.0, 0.03]);
        let again = parse_embeddings(&format_embeddings(&data), "mem").unwrap();
        assert_eq!(again, data);
    }

    #[test]
    fn ragged_embedding_row_reports_line() {
        let text = "PLDA-TXT 1 3\na\t1 2 3\nb\t1 2\n";
        match parse_embeddings(text, "emb.txt") {
            Err(PldaError::Parse { path, line, message }) => {
                assert_eq!(path, "emb.txt");
                assert_eq!(line, 3);
                assert!(message.contains("expected 3 values"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn embedding_header_errors() {
        assert!(parse_embeddings("", "x").is_err());
        assert!(parse_embeddings("PLDA-TXT 2 3\n", "x").is_err());
        assert!(parse_embeddings("PLDA-TXT 1 0\n", "x").is_err());
        assert!(parse_embeddings("PLDA-MODEL 1 3\n", "x").is_err());
        assert!(parse_embeddings("PLDA-TXT 1 1\nnotab 1\n", "x").is_err());
        assert!(parse_embeddings("PLDA-TXT 1 1\na\tNaN\n", "x").is_err());
    }

    #[test]
    fn model_round_trip_is_byte_identical() {
        let model = PldaModel::new(
            vec![0.1, -1.0 / 3.0],
            SymMatrix::from_rows(&[vec![2.0, 0.1], vec![0.1, std::f64::consts::PI]]).unwrap(),
            SymMatrix::from_rows(&[vec![1.0 / 7.0, 0.0], vec![0.0, 1e-300]]).unwrap(),
        )
        .unwrap();
        let text = format_model(&model);
        let back = parse_model(&text, "m").unwrap();
        assert_eq!(back, model);
        assert_eq!(format_model(&back), text);
    }

    #[test]
    fn model_version_and_shape_errors() {
        assert!(parse_model("PLDA-MODEL 2 1\n0\n1\n1\n", "m").is_err());
        assert!(parse_model("PLDA-MODEL 1 1\n0\n1\n", "m").is_err());
        assert!(parse_model("PLDA-MODEL 1 1\n0\n1\n1\n5\n", "m").is_err());
        assert!(parse_model("PLDA-MODEL 1 1\n0\n1\n0\n", "m").is_err());
        let ok = parse_model("PLDA-MODEL 1 1\n0\n1\n1\n", "m").unwrap();
        assert_eq!(ok.dim(), 1);
    }

    #[test]
    fn trials_parse() {
        let trials = parse_trials("a\t0\n\nb c\t12\n", "t").unwrap();
        assert_eq!(trials.len(), 2);
        assert_eq!(trials[1], Trial { enroll_id: "b c".into(), test_index: 12, line: 3 });
        assert!(matches!(parse_trials("a\t-1\n", "t"), Err(PldaError::Parse { line: 1, .. })));
        assert!(matches!(parse_trials("a\t1\nb\n", "t"), Err(PldaError::Parse { line: 2, .. })));
    }

    #[test]
    fn score_line_has_nine_significant_digits() {
        let t = Trial { enroll_id: "spk".into(), test_index: 4, line: 1 };
        assert_eq!(format_score(&t, -1.0 / 3.0), "spk\t4\t-3.33333333e-1\n");
    }

    #[test]
    fn matrix_file() {
        let m = parse_matrix("2 0.5\n0.5 1\n", "cov").unwrap();
        assert_eq!(m.as_slice(), &[2.0, 0.5, 0.5, 1.0]);
        assert!(parse_matrix("1 2\n3 4\n", "cov").is_err());
        assert!(parse_matrix("1 2\n", "cov").is_err());
    }
}
