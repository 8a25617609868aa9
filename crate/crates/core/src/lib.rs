//! Two-covariance probabilistic linear discriminant analysis.
//!
//! The model draws a class center `y ~ N(μ, Φ_b)` and then each observation
//! `z ~ N(y, Φ_w)`. This crate estimates `μ`, `Φ_b` and `Φ_w` by EM from
//! labeled vectors, samples synthetic data from known parameters, and scores
//! verification trials by log-likelihood ratio.
//!
//! Modules, bottom-up:
//! - [`spd_math`]: Cholesky-based SPD kernel.
//! - [`data_stats`]: labeled datasets and their sufficient statistics.
//! - [`em_engine`]: posterior E-step, the two M-step variants, likelihood, training.
//! - [`scoring`]: enrollment and LLR scoring.
//! - [`synth_gen`]: seeded sampling from the generative model.
//! - [`formats`] and [`cli`]: text file formats and the `plda` command.

pub mod cli;
pub mod data_stats;
pub mod em_engine;
pub mod error;
pub mod formats;
pub mod scoring;
pub mod spd_math;
pub mod synth_gen;

pub use data_stats::{accumulate_stats, center_dataset, ClassStats, DatasetStats, LabeledDataset};
pub use em_engine::{
    class_mean_log_likelihood, e_step_class, em_train, log_likelihood, m_step, train_from_stats, ClassPosterior, Init,
    IterationRecord, JitterEvent, JitterTarget, MStepOutput, PldaModel, PosteriorSolver, TrainConfig, TrainReport,
    Variant,
};
pub use error::{PldaError, Result};
pub use scoring::{enroll, score_llr, Enrollment};
pub use spd_math::{cholesky, inverse_spd, logdet_spd, symmetrize, Cholesky, SymMatrix};
pub use synth_gen::{generate, random_spd, SynthSpec};
