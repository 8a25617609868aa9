//! `plda` command-line front end.
//!
//! Exit codes: 0 success, 1 data or model error, 2 usage error.

use std::collections::HashMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::em_engine::{em_train, Init, PldaModel, TrainConfig, Variant, DEFAULT_JITTER};
use crate::error::{PldaError, Result};
use crate::formats;
use crate::scoring::{enroll, score_llr, Enrollment};
use crate::spd_math::{cholesky, SymMatrix};
use crate::synth_gen::{generate, SynthSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DATA: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "plda", version, about = "Two-covariance PLDA training and scoring")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train a model from an embedding file.
    Train(TrainArgs),
    /// Sample a synthetic embedding file.
    Synth(SynthArgs),
    /// Score a trial list.
    Score(ScoreArgs),
    /// Print model summary statistics.
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u32).range(1..))]
    iters: u32,
    #[arg(long, default_value = "kaldi", value_parser = ["paper", "kaldi"])]
    variant: String,
    #[arg(long, default_value = "data-split", value_parser = ["identity", "data-split"])]
    init: String,
    #[arg(long, default_value_t = 0.0, value_parser = non_negative)]
    tol: f64,
    /// Optional per-iteration log-likelihood report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    dim: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    classes: u32,
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    per_class: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Between-class covariance file (default: identity).
    #[arg(long)]
    phi_b: Option<PathBuf>,
    /// Within-class covariance file (default: identity).
    #[arg(long)]
    phi_w: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    enroll: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    trials: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    model: PathBuf,
}

fn non_negative(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a finite non-negative number")),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = err.render().to_string();
            let sink: &mut dyn Write = if err.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    let result = match cli.command {
        Command::Train(args) => cmd_train(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Score(args) => cmd_score(&args),
        Command::Inspect(args) => cmd_inspect(&args, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let _ = writeln!(stderr, "plda: error: {err}");
            EXIT_DATA
        }
    }
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let data = formats::read_embeddings(&args.data)?;
    let config = TrainConfig {
        iterations: args.iters as usize,
        variant: args.variant.parse::<Variant>()?,
        jitter: DEFAULT_JITTER,
        tolerance: args.tol,
        init: args.init.parse::<Init>()?,
    };
    let (model, report) = em_train(&data, &config)?;
    formats::write_file(&args.out, &formats::format_model(&model))?;
    if let Some(path) = &args.report {
        formats::write_file(path, &formats::format_report(&report))?;
    }
    Ok(())
}

fn load_covariance(path: Option<&Path>, dim: usize) -> Result<SymMatrix> {
    let Some(path) = path else {
        return Ok(SymMatrix::identity(dim));
    };
    let m = formats::read_matrix(path)?;
    if m.dim() != dim {
        return Err(PldaError::DimensionMismatch { expected: dim, found: m.dim() });
    }
    Ok(m)
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let dim = args.dim as usize;
    let spec = SynthSpec::uniform(
        vec![0.0; dim],
        load_covariance(args.phi_b.as_deref(), dim)?,
        load_covariance(args.phi_w.as_deref(), dim)?,
        args.classes as usize,
        args.per_class as usize,
        args.seed,
    );
    let data = generate(&spec)?;
    formats::write_file(&args.out, &formats::format_embeddings(&data))
}

fn cmd_score(args: &ScoreArgs) -> Result<()> {
    let model = formats::read_model(&args.model)?;
    let enroll_data = formats::read_embeddings(&args.enroll)?;
    let test_data = formats::read_embeddings(&args.test)?;
    let trials_source = args.trials.display().to_string();
    let trials = formats::parse_trials(&formats::read_file(&args.trials)?, &trials_source)?;

    for data in [&enroll_data, &test_data] {
        if data.dim() != model.dim() {
            return Err(PldaError::DimensionMismatch { expected: model.dim(), found: data.dim() });
        }
    }

    let mut enrollments: HashMap<&str, Enrollment> = HashMap::new();
    let mut out = String::new();
    for trial in &trials {
        let trial_error = |message: String| PldaError::Parse { path: trials_source.clone(), line: trial.line, message };
        if trial.test_index >= test_data.len() {
            return Err(trial_error(format!(
                "test index {} out of range ({} test vectors)",
                trial.test_index,
                test_data.len()
            )));
        }
        let class = enroll_data
            .class_index(&trial.enroll_id)
            .ok_or_else(|| trial_error(format!("unknown enrollment class `{}`", trial.enroll_id)))?;
        if !enrollments.contains_key(trial.enroll_id.as_str()) {
            let vectors: Vec<&[f64]> = enroll_data.class_vectors(class).collect();
            enrollments.insert(&enroll_data.class_ids()[class], enroll(&model, &vectors)?);
        }
        let enrollment = &enrollments[trial.enroll_id.as_str()];
        let llr = score_llr(&model, enrollment, test_data.vector(trial.test_index))?;
        out.push_str(&formats::format_score(trial, llr));
    }
    formats::write_file(&args.out, &out)
}

/// Summary statistics printed by `plda inspect`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSummary {
    pub dim: usize,
    pub mu_norm: f64,
    pub phi_b: CovarianceSummary,
    pub phi_w: CovarianceSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSummary {
    pub trace: f64,
    /// Smallest and largest squared Cholesky pivots; `None` when the
    /// matrix does not factor.
    pub pivots: Option<(f64, f64)>,
}

impl CovarianceSummary {
    fn of(m: &SymMatrix) -> Self {
        Self { trace: m.trace(), pivots: cholesky(m).ok().map(|ch| (ch.min_pivot(), ch.max_pivot())) }
    }
}

pub fn summarize(model: &PldaModel) -> ModelSummary {
    ModelSummary {
        dim: model.dim(),
        mu_norm: model.mu().iter().map(|v| v * v).sum::<f64>().sqrt(),
        phi_b: CovarianceSummary::of(model.phi_b()),
        phi_w: CovarianceSummary::of(model.phi_w()),
    }
}

impl std::fmt::Display for ModelSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "dim\t{}", self.dim)?;
        writeln!(f, "mu_norm\t{:.9e}", self.mu_norm)?;
        for (name, c) in [("phi_b", &self.phi_b), ("phi_w", &self.phi_w)] {
            writeln!(f, "{name}_trace\t{:.9e}", c.trace)?;
            match c.pivots {
                Some((lo, hi)) => {
                    writeln!(f, "{name}_min_pivot\t{lo:.9e}")?;
                    writeln!(f, "{name}_max_pivot\t{hi:.9e}")?;
                }
                None => {
                    writeln!(f, "{name}_min_pivot\tnot-pd")?;
                    writeln!(f, "{name}_max_pivot\tnot-pd")?;
                }
            }
        }
        Ok(())
    }
}

fn cmd_inspect(args: &InspectArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = formats::read_model(&args.model)?;
    write!(stdout, "{}", summarize(&model)).map_err(|source| PldaError::Io { path: "<stdout>".into(), source })
}
