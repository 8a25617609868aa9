//! Verification scoring: enroll a class, then score a single test vector by
//! the same-class vs different-class log-likelihood ratio.

use std::f64::consts::PI;

use crate::em_engine::{ClassPosterior, PldaModel, PosteriorSolver, DEFAULT_JITTER};
use crate::error::{PldaError, Result};
use crate::spd_math::{cholesky, SymMatrix};

/// Posterior over an enrolled class center.
#[derive(Debug, Clone, PartialEq)]
pub struct Enrollment {
    pub posterior: ClassPosterior,
    pub model_dim: usize,
}

/// Centers `vectors` by `μ`, averages them and computes the class-center
/// posterior with `n = vectors.len()`.
pub fn enroll<V: AsRef<[f64]>>(model: &PldaModel, vectors: &[V]) -> Result<Enrollment> {
    if vectors.is_empty() {
        return Err(PldaError::EmptyEnrollment);
    }
    let dim = model.dim();
    let mut mean = vec![0.0; dim];
    for v in vectors {
        let v = v.as_ref();
        if v.len() != dim {
            return Err(PldaError::DimensionMismatch { expected: dim, found: v.len() });
        }
        for (acc, (x, mu)) in mean.iter_mut().zip(v.iter().zip(model.mu())) {
            *acc += x - mu;
        }
    }
    let n = vectors.len();
    for acc in &mut mean {
        *acc /= n as f64;
    }
    let solver = PosteriorSolver::new(model.phi_b(), model.phi_w(), DEFAULT_JITTER)?;
    Ok(Enrollment { posterior: solver.posterior(&mean, n)?, model_dim: dim })
}

/// `log N(x; mean, cov)`.
pub fn log_gaussian(x: &[f64], mean: &[f64], cov: &SymMatrix) -> Result<f64> {
    let ch = cholesky(cov)?;
    let diff: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let d = x.len() as f64;
    Ok(-0.5 * (d * (2.0 * PI).ln() + ch.logdet() + ch.inv_quad_form(&diff)))
}

/// `log N(t; w_e, Φ̂_e + Φ_w) - log N(t; 0, Φ_b + Φ_w)` with `t = test - μ`.
pub fn score_llr(model: &PldaModel, enrollment: &Enrollment, test: &[f64]) -> Result<f64> {
    let dim = model.dim();
    for found in [test.len(), enrollment.model_dim] {
        if found != dim {
            return Err(PldaError::DimensionMismatch { expected: dim, found });
        }
    }
    let t: Vec<f64> = test.iter().zip(model.mu()).map(|(x, mu)| x - mu).collect();
    let post = &enrollment.posterior;
    let same = log_gaussian(&t, &post.w, &post.phi_hat.add(model.phi_w()))?;
    let different = log_gaussian(&t, &vec![0.0; dim], &model.phi_b().add(model.phi_w()))?;
    Ok(same - different)
}
