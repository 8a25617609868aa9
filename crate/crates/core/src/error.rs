use thiserror::Error;

/// Errors produced by the PLDA library.
#[derive(Debug, Error)]
pub enum PldaError {
    /// Cholesky factorization hit a non-positive pivot.
    #[error("matrix is not positive definite (pivot {value:e} at row {row})")]
    NotPositiveDefinite { row: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NotSymmetric { row: usize, col: usize, gap: f64 },

    #[error("at least 2 classes are required, found {0}")]
    TooFewClasses(usize),

    #[error("posterior/class misalignment: {posteriors} posteriors for {classes} classes")]
    Alignment { posteriors: usize, classes: usize },

    #[error("enrollment requires at least one vector")]
    EmptyEnrollment,

    #[error("non-finite log-likelihood at iteration {iteration} (trace phi_b = {phi_b_trace:e}, trace phi_w = {phi_w_trace:e})")]
    NonFiniteLikelihood { iteration: usize, phi_b_trace: f64, phi_w_trace: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, PldaError>;
