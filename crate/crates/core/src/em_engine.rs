//! Two-covariance PLDA model, closed-form posterior and EM training.
//!
//! Each class mean `m` (centered by the global mean) is treated as the sum of
//! a between-class latent `x_between ~ N(0, Φ_b)` and a pooled within-class
//! residual `y ~ N(0, Φ_w / n)`. The E-step computes the Gaussian posterior of
//! `x_between` given `m`; the M-step re-estimates `Φ_b` and `Φ_w` from the
//! posterior moments. `μ` is estimated once and never updated.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::data_stats::{accumulate_stats, DatasetStats, LabeledDataset};
use crate::error::{PldaError, Result};
use crate::spd_math::{cholesky, Cholesky, SymMatrix};

/// Default relative jitter: `ε = 1e-8 · trace / d`.
pub const DEFAULT_JITTER: f64 = 1e-8;

/// Maximum number of ×10 jitter escalations before giving up.
const MAX_JITTER_STEPS: usize = 24;

/// Learned parameters: global mean, between-class and within-class covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct PldaModel {
    mu: Vec<f64>,
    phi_b: SymMatrix,
    phi_w: SymMatrix,
}

impl PldaModel {
    /// Validates dimensions, `Φ_w` positive definite and `Φ_b` positive
    /// semidefinite (checked as a Cholesky of `Φ_b + 1e-10·max|Φ_b|·I`).
    pub fn new(mu: Vec<f64>, phi_b: SymMatrix, phi_w: SymMatrix) -> Result<Self> {
        let dim = mu.len();
        for found in [phi_b.dim(), phi_w.dim()] {
            if found != dim {
                return Err(PldaError::DimensionMismatch { expected: dim, found });
            }
        }
        if mu.iter().any(|v| !v.is_finite()) {
            return Err(PldaError::InvalidValue("non-finite entry in mu".into()));
        }
        cholesky(&phi_w)?;
        let mut probe = phi_b.clone();
        probe.add_diagonal(1e-10 * phi_b.max_abs().max(f64::MIN_POSITIVE));
        cholesky(&probe)?;
        Ok(Self { mu, phi_b, phi_w })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn phi_b(&self) -> &SymMatrix {
        &self.phi_b
    }

    pub fn phi_w(&self) -> &SymMatrix {
        &self.phi_w
    }
}

/// Posterior `N(w, Φ̂)` of the between-class latent for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPosterior {
    pub phi_hat: SymMatrix,
    pub w: Vec<f64>,
    pub n: usize,
}

/// Which `Φ_w` update the M-step uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// `Φ_w = (1/K) Σ_k n_k (Φ̂_k + (w_k - m_k)(w_k - m_k)ᵀ)`: EM for the
    /// class-mean model, ignores the within-class scatter.
    Paper,
    /// `Φ_w = (1/N) (S + Σ_k n_k (Φ̂_k + (w_k - m_k)(w_k - m_k)ᵀ))`.
    #[default]
    Kaldi,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Paper => "paper",
            Variant::Kaldi => "kaldi",
        })
    }
}

impl FromStr for Variant {
    type Err = PldaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Variant::Paper),
            "kaldi" => Ok(Variant::Kaldi),
            other => Err(PldaError::InvalidConfig(format!("unknown variant `{other}`"))),
        }
    }
}

/// Starting point for EM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// `Φ_b = Φ_w = I`.
    Identity,
    /// `Φ_w = S / (N - K)`, `Φ_b = T / N - Φ_w` (T the total scatter), both
    /// jittered to positive definite.
    #[default]
    DataSplit,
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Init::Identity => "identity",
            Init::DataSplit => "data-split",
        })
    }
}

impl FromStr for Init {
    type Err = PldaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Init::Identity),
            "data-split" => Ok(Init::DataSplit),
            other => Err(PldaError::InvalidConfig(format!("unknown init `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub variant: Variant,
    /// Relative jitter factor: a matrix that fails Cholesky gets
    /// `jitter · trace / d · I` added, escalating ×10 until it factors.
    /// Zero disables regularization.
    pub jitter: f64,
    /// Early stop when the relative log-likelihood gain drops below this.
    /// Zero runs the fixed iteration count.
    pub tolerance: f64,
    pub init: Init,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { iterations: 10, variant: Variant::Kaldi, jitter: DEFAULT_JITTER, tolerance: 0.0, init: Init::DataSplit }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(PldaError::InvalidConfig("iterations must be at least 1".into()));
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(PldaError::InvalidConfig("jitter must be finite and non-negative".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance >= 0.0) {
            return Err(PldaError::InvalidConfig("tolerance must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Which matrix a jitter event was applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JitterTarget {
    PhiB,
    PhiW,
    /// `Φ_b` regularized before inversion inside the E-step.
    PriorInverse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JitterEvent {
    /// 0 for initialization.
    pub iteration: usize,
    pub target: JitterTarget,
    /// Absolute value added to the diagonal.
    pub amount: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Observed-data log-likelihood of all samples after this update.
    pub log_likelihood: f64,
    /// Log-likelihood of the class means alone, the quantity the paper
    /// variant's M-step ascends.
    pub class_mean_log_likelihood: f64,
    pub phi_b_trace: f64,
    pub phi_w_trace: f64,
    /// Smallest squared Cholesky pivot, a cheap lower-eigenvalue proxy.
    pub phi_b_min_pivot: f64,
    pub phi_w_min_pivot: f64,
}

impl IterationRecord {
    /// The objective the given variant's EM update is guaranteed not to
    /// decrease (absent jitter).
    pub fn objective(&self, variant: Variant) -> f64 {
        match variant {
            Variant::Kaldi => self.log_likelihood,
            Variant::Paper => self.class_mean_log_likelihood,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    pub iterations: Vec<IterationRecord>,
    pub jitter_events: Vec<JitterEvent>,
    pub stopped_early: bool,
}

/// Adds escalating diagonal jitter until `a` factors. Returns the jitter
/// amount when any was needed.
pub fn regularize(a: &SymMatrix, relative: f64) -> Result<(SymMatrix, Cholesky, Option<f64>)> {
    let first_err = match cholesky(a) {
        Ok(ch) => return Ok((a.clone(), ch, None)),
        Err(e) => e,
    };
    if relative == 0.0 {
        return Err(first_err);
    }
    let trace = a.trace();
    let scale = if trace > 0.0 && trace.is_finite() { trace / a.dim() as f64 } else { 1.0 };
    let mut eps = relative * scale;
    for _ in 0..MAX_JITTER_STEPS {
        let mut candidate = a.clone();
        candidate.add_diagonal(eps);
        if let Ok(ch) = cholesky(&candidate) {
            return Ok((candidate, ch, Some(eps)));
        }
        eps *= 10.0;
    }
    Err(first_err)
}

/// Precomputed inverses of a model's covariances, shared by every per-class
/// posterior in an E-step sweep.
#[derive(Debug, Clone)]
pub struct PosteriorSolver {
    phi_b_inv: SymMatrix,
    phi_w_inv: SymMatrix,
    prior_jitter: Option<f64>,
}

impl PosteriorSolver {
    /// A singular `Φ_b` is jittered (relative factor `jitter`) before
    /// inversion; a singular `Φ_w` is an error.
    pub fn new(phi_b: &SymMatrix, phi_w: &SymMatrix, jitter: f64) -> Result<Self> {
        let phi_w_inv = cholesky(phi_w)?.inverse();
        let (_, phi_b_chol, prior_jitter) = regularize(phi_b, jitter)?;
        Ok(Self { phi_b_inv: phi_b_chol.inverse(), phi_w_inv, prior_jitter })
    }

    /// Jitter added to `Φ_b` before inversion, if any.
    pub fn prior_jitter(&self) -> Option<f64> {
        self.prior_jitter
    }

    /// `Φ̂ = (Φ_b⁻¹ + nΦ_w⁻¹)⁻¹`, `w = Φ̂ · nΦ_w⁻¹ m`.
    pub fn posterior(&self, m: &[f64], n: usize) -> Result<ClassPosterior> {
        let dim = self.phi_w_inv.dim();
        if m.len() != dim {
            return Err(PldaError::DimensionMismatch { expected: dim, found: m.len() });
        }
        if n == 0 {
            return Err(PldaError::InvalidValue("class count must be at least 1".into()));
        }
        let nf = n as f64;
        let precision = self.phi_b_inv.add(&self.phi_w_inv.scale(nf));
        let precision_chol = cholesky(&precision)?;
        let natural: Vec<f64> = self.phi_w_inv.matvec(m).iter().map(|v| nf * v).collect();
        Ok(ClassPosterior { phi_hat: precision_chol.inverse(), w: precision_chol.solve(&natural), n })
    }
}

/// Posterior of the between-class latent for one centered class mean.
pub fn e_step_class(model: &PldaModel, m: &[f64], n: usize) -> Result<ClassPosterior> {
    PosteriorSolver::new(&model.phi_b, &model.phi_w, DEFAULT_JITTER)?.posterior(m, n)
}

/// Output of one M-step.
#[derive(Debug, Clone, PartialEq)]
pub struct MStepOutput {
    pub phi_b: SymMatrix,
    pub phi_w: SymMatrix,
    pub phi_b_jitter: Option<f64>,
    pub phi_w_jitter: Option<f64>,
}

/// Re-estimates `Φ_b` and `Φ_w` from per-class posteriors.
///
/// `Φ_b = (1/K) Σ_k (Φ̂_k + w_k w_kᵀ)` for both variants; `Φ_w` follows
/// [`Variant`]. Outputs that fail Cholesky are jittered with relative factor
/// `jitter` (see [`regularize`]).
pub fn m_step(
    posteriors: &[ClassPosterior],
    class_means: &[Vec<f64>],
    stats: &DatasetStats,
    variant: Variant,
    jitter: f64,
) -> Result<MStepOutput> {
    let k = stats.num_classes();
    if posteriors.len() != k || class_means.len() != k {
        return Err(PldaError::Alignment { posteriors: posteriors.len().min(class_means.len()), classes: k });
    }
    let dim = stats.dim;
    let mut between = SymMatrix::zeros(dim);
    let mut within = SymMatrix::zeros(dim);
    let mut residual = vec![0.0; dim];
    for ((post, m), class) in posteriors.iter().zip(class_means).zip(&stats.classes) {
        if post.n != class.n {
            return Err(PldaError::Alignment { posteriors: posteriors.len(), classes: k });
        }
        if post.w.len() != dim || m.len() != dim {
            return Err(PldaError::DimensionMismatch {
                expected: dim,
                found: if post.w.len() != dim { post.w.len() } else { m.len() },
            });
        }
        between.add_assign(&post.phi_hat);
        between.add_outer(&post.w, 1.0);

        let n = class.n as f64;
        for ((r, w), c) in residual.iter_mut().zip(&post.w).zip(m) {
            *r = w - c;
        }
        within.add_assign(&post.phi_hat.scale(n));
        within.add_outer(&residual, n);
    }

    let phi_b = between.scale(1.0 / k as f64);
    let phi_w = match variant {
        Variant::Paper => within.scale(1.0 / k as f64),
        Variant::Kaldi => {
            within.add_assign(&stats.scatter);
            within.scale(1.0 / stats.total as f64)
        }
    };

    let (phi_b, _, phi_b_jitter) = regularize(&phi_b, jitter)?;
    let (phi_w, _, phi_w_jitter) = regularize(&phi_w, jitter)?;
    Ok(MStepOutput { phi_b, phi_w, phi_b_jitter, phi_w_jitter })
}

fn check_dims(model: &PldaModel, stats: &DatasetStats) -> Result<()> {
    if stats.dim != model.dim() {
        return Err(PldaError::DimensionMismatch { expected: model.dim(), found: stats.dim });
    }
    Ok(())
}

/// `Σ_k log N(m_k; 0, Φ_b + Φ_w / n_k)` with `m_k = c_k - μ_model`.
fn class_mean_terms(model: &PldaModel, stats: &DatasetStats) -> Result<f64> {
    let d = model.dim() as f64;
    let log_2pi = (2.0 * PI).ln();
    let mut acc = 0.0;
    let mut m = vec![0.0; model.dim()];
    for class in &stats.classes {
        for ((dst, c), mu) in m.iter_mut().zip(&class.mean).zip(&model.mu) {
            *dst = c - mu;
        }
        let marginal = model.phi_b.add(&model.phi_w.scale(1.0 / class.n as f64));
        let ch = cholesky(&marginal)?;
        acc -= 0.5 * (d * log_2pi + ch.logdet() + ch.inv_quad_form(&m));
    }
    Ok(acc)
}

/// Exact log-density of every sample with the class centers integrated out.
///
/// Uses only the sufficient statistics: for each class the density factors
/// into the class-mean marginal `N(m_k; 0, Φ_b + Φ_w/n_k)` times a
/// within-class term in the pooled scatter `S`.
pub fn log_likelihood(model: &PldaModel, stats: &DatasetStats) -> Result<f64> {
    check_dims(model, stats)?;
    let d = model.dim() as f64;
    let log_2pi = (2.0 * PI).ln();
    let dof = (stats.total - stats.num_classes()) as f64;

    let w_chol = cholesky(&model.phi_w)?;
    let w_inv = w_chol.inverse();
    let trace_term: f64 = w_inv.as_slice().iter().zip(stats.scatter.as_slice()).map(|(a, b)| a * b).sum();
    let log_n: f64 = stats.classes.iter().map(|c| (c.n as f64).ln()).sum();

    let within = -0.5 * dof * d * log_2pi - 0.5 * dof * w_chol.logdet() - 0.5 * trace_term - 0.5 * d * log_n;
    Ok(within + class_mean_terms(model, stats)?)
}

/// Log-likelihood of the class means alone under `m_k ~ N(0, Φ_b + Φ_w/n_k)`.
pub fn class_mean_log_likelihood(model: &PldaModel, stats: &DatasetStats) -> Result<f64> {
    check_dims(model, stats)?;
    class_mean_terms(model, stats)
}

fn initialize(stats: &DatasetStats, config: &TrainConfig) -> Result<(SymMatrix, SymMatrix, Vec<JitterEvent>)> {
    let dim = stats.dim;
    match config.init {
        Init::Identity => Ok((SymMatrix::identity(dim), SymMatrix::identity(dim), Vec::new())),
        Init::DataSplit => {
            let n = stats.total as f64;
            let k = stats.num_classes() as f64;
            let total_cov = stats.total_scatter().scale(1.0 / n);
            let within = if stats.total > stats.num_classes() {
                stats.scatter.scale(1.0 / (n - k))
            } else {
                total_cov.scale(0.5)
            };
            let between = total_cov.sub(&within);
            let jitter = if config.jitter > 0.0 { config.jitter } else { DEFAULT_JITTER };
            let (phi_w, _, jw) = regularize(&within, jitter)?;
            let (phi_b, _, jb) = regularize(&between, jitter)?;
            let events = [(JitterTarget::PhiW, jw), (JitterTarget::PhiB, jb)]
                .into_iter()
                .filter_map(|(target, amount)| amount.map(|amount| JitterEvent { iteration: 0, target, amount }))
                .collect();
            Ok((phi_b, phi_w, events))
        }
    }
}

/// Runs EM from a dataset. See [`train_from_stats`].
pub fn em_train(data: &LabeledDataset, config: &TrainConfig) -> Result<(PldaModel, TrainReport)> {
    config.validate()?;
    let stats = accumulate_stats(data)?;
    train_from_stats(&stats, config)
}

/// Runs EM on precomputed statistics. `μ` is taken from `stats` and held
/// fixed; each iteration is one E-step sweep over all classes followed by
/// one M-step, and the report gets one record per completed iteration.
pub fn train_from_stats(stats: &DatasetStats, config: &TrainConfig) -> Result<(PldaModel, TrainReport)> {
    config.validate()?;
    if stats.num_classes() < 2 {
        return Err(PldaError::TooFewClasses(stats.num_classes()));
    }
    let (mut phi_b, mut phi_w, jitter_events) = initialize(stats, config)?;
    let mut report = TrainReport { jitter_events, ..TrainReport::default() };
    let class_means: Vec<Vec<f64>> = stats.classes.iter().map(|c| c.centered_mean.clone()).collect();

    for iteration in 1..=config.iterations {
        let solver = PosteriorSolver::new(&phi_b, &phi_w, config.jitter)?;
        if let Some(amount) = solver.prior_jitter() {
            report.jitter_events.push(JitterEvent { iteration, target: JitterTarget::PriorInverse, amount });
        }
        let posteriors =
            stats.classes.iter().map(|c| solver.posterior(&c.centered_mean, c.n)).collect::<Result<Vec<_>>>()?;

        let update = m_step(&posteriors, &class_means, stats, config.variant, config.jitter)?;
        for (target, amount) in [(JitterTarget::PhiB, update.phi_b_jitter), (JitterTarget::PhiW, update.phi_w_jitter)] {
            if let Some(amount) = amount {
                report.jitter_events.push(JitterEvent { iteration, target, amount });
            }
        }
        phi_b = update.phi_b;
        phi_w = update.phi_w;

        let model = PldaModel { mu: stats.mu.clone(), phi_b: phi_b.clone(), phi_w: phi_w.clone() };
        let non_finite =
            || PldaError::NonFiniteLikelihood { iteration, phi_b_trace: phi_b.trace(), phi_w_trace: phi_w.trace() };
        let ll = log_likelihood(&model, stats).map_err(|_| non_finite())?;
        let mean_ll = class_mean_log_likelihood(&model, stats).map_err(|_| non_finite())?;
        if !ll.is_finite() || !mean_ll.is_finite() {
            return Err(non_finite());
        }

        let record = IterationRecord {
            iteration,
            log_likelihood: ll,
            class_mean_log_likelihood: mean_ll,
            phi_b_trace: phi_b.trace(),
            phi_w_trace: phi_w.trace(),
            phi_b_min_pivot: cholesky(&phi_b)?.min_pivot(),
            phi_w_min_pivot: cholesky(&phi_w)?.min_pivot(),
        };
        let gain = report.iterations.last().map(|prev| {
            let before = prev.objective(config.variant);
            (record.objective(config.variant) - before) / before.abs().max(f64::MIN_POSITIVE)
        });
        report.iterations.push(record);
        if config.tolerance > 0.0 && gain.is_some_and(|g| g < config.tolerance) {
            report.stopped_early = true;
            break;
        }
    }

    let model = PldaModel { mu: stats.mu.clone(), phi_b, phi_w };
    Ok((model, report))
}
