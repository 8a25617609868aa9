//! Labeled vector storage and the one-pass sufficient statistics used by EM.

use std::collections::HashMap;

use crate::error::{PldaError, Result};
use crate::spd_math::SymMatrix;

/// Fixed-dimension vectors tagged with opaque class labels.
///
/// Labels are interned to dense indices in first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    dim: usize,
    class_ids: Vec<String>,
    lookup: HashMap<String, usize>,
    labels: Vec<usize>,
    values: Vec<f64>,
}

impl LabeledDataset {
    /// # Panics
    /// Panics if `dim == 0`.
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "vector dimension must be at least 1");
        Self { dim, class_ids: Vec::new(), lookup: HashMap::new(), labels: Vec::new(), values: Vec::new() }
    }

    pub fn push(&mut self, class_id: &str, vector: &[f64]) -> Result<()> {
        if vector.len() != self.dim {
            return Err(PldaError::DimensionMismatch { expected: self.dim, found: vector.len() });
        }
        let index = match self.lookup.get(class_id) {
            Some(&index) => index,
            None => {
                let index = self.class_ids.len();
                self.class_ids.push(class_id.to_owned());
                self.lookup.insert(class_id.to_owned(), index);
                index
            }
        };
        self.labels.push(index);
        self.values.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_ids.len()
    }

    /// Class labels in first-appearance order.
    pub fn class_ids(&self) -> &[String] {
        &self.class_ids
    }

    pub fn class_index(&self, class_id: &str) -> Option<usize> {
        self.lookup.get(class_id).copied()
    }

    pub fn vector(&self, row: usize) -> &[f64] {
        &self.values[row * self.dim..(row + 1) * self.dim]
    }

    pub fn label_index(&self, row: usize) -> usize {
        self.labels[row]
    }

    pub fn label(&self, row: usize) -> &str {
        &self.class_ids[self.labels[row]]
    }

    /// Iterates `(class_id, vector)` in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> + '_ {
        self.labels.iter().zip(self.values.chunks(self.dim)).map(|(&k, v)| (self.class_ids[k].as_str(), v))
    }

    /// Vectors belonging to one class, in insertion order.
    pub fn class_vectors(&self, class_index: usize) -> impl Iterator<Item = &[f64]> + '_ {
        self.labels.iter().zip(self.values.chunks(self.dim)).filter(move |(&k, _)| k == class_index).map(|(_, v)| v)
    }

    /// Applies `f` to every vector, keeping labels.
    pub fn map_vectors(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let mut out = self.clone();
        out.values.clear();
        for v in self.values.chunks(self.dim) {
            out.values.extend(f(v));
        }
        out
    }
}

/// Per-class count and mean.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub class_id: String,
    pub n: usize,
    /// `c_k`, the raw class mean.
    pub mean: Vec<f64>,
    /// `m_k = c_k - μ`.
    pub centered_mean: Vec<f64>,
}

/// Sufficient statistics of a labeled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub dim: usize,
    /// Total sample count `N`.
    pub total: usize,
    /// Global mean `μ`.
    pub mu: Vec<f64>,
    pub classes: Vec<ClassStats>,
    /// Within-class scatter `S = Σ_k Σ_i (z_ki - c_k)(z_ki - c_k)ᵀ`.
    pub scatter: SymMatrix,
}

impl DatasetStats {
    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Total scatter about `μ`, via `S + Σ_k n_k m_k m_kᵀ`.
    pub fn total_scatter(&self) -> SymMatrix {
        let mut t = self.scatter.clone();
        for c in &self.classes {
            t.add_outer(&c.centered_mean, c.n as f64);
        }
        t
    }
}

/// Computes the global mean, per-class means and the within-class scatter.
///
/// Single-threaded; the result is bitwise deterministic for a fixed record
/// order.
pub fn accumulate_stats(data: &LabeledDataset) -> Result<DatasetStats> {
    let dim = data.dim();
    let k = data.num_classes();
    if k < 2 {
        return Err(PldaError::TooFewClasses(k));
    }

    let mut counts = vec![0usize; k];
    let mut sums = vec![vec![0.0; dim]; k];
    let mut total_sum = vec![0.0; dim];
    for (row, v) in data.values.chunks(dim).enumerate() {
        let class = data.labels[row];
        counts[class] += 1;
        for ((s, t), &x) in sums[class].iter_mut().zip(total_sum.iter_mut()).zip(v) {
            *s += x;
            *t += x;
        }
    }

    let total = data.len();
    let mu: Vec<f64> = total_sum.iter().map(|s| s / total as f64).collect();
    let means: Vec<Vec<f64>> =
        sums.iter().zip(&counts).map(|(s, &n)| s.iter().map(|x| x / n as f64).collect()).collect();

    let mut scatter = SymMatrix::zeros(dim);
    let mut diff = vec![0.0; dim];
    for (row, v) in data.values.chunks(dim).enumerate() {
        let c = &means[data.labels[row]];
        for ((d, &x), &m) in diff.iter_mut().zip(v).zip(c) {
            *d = x - m;
        }
        scatter.add_outer(&diff, 1.0);
    }

    let classes = means
        .into_iter()
        .zip(counts)
        .zip(data.class_ids())
        .map(|((mean, n), id)| ClassStats {
            class_id: id.clone(),
            n,
            centered_mean: mean.iter().zip(&mu).map(|(c, m)| c - m).collect(),
            mean,
        })
        .collect();

    Ok(DatasetStats { dim, total, mu, classes, scatter })
}

/// Subtracts `mu` from every vector.
pub fn center_dataset(data: &LabeledDataset, mu: &[f64]) -> Result<LabeledDataset> {
    if mu.len() != data.dim() {
        return Err(PldaError::DimensionMismatch { expected: data.dim(), found: mu.len() });
    }
    Ok(data.map_vectors(|v| v.iter().zip(mu).map(|(x, m)| x - m).collect()))
}
