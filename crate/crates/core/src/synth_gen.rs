//! Sampling from the two-stage generative model with known parameters.
//!
//! The random stream is ChaCha20 (`rand_chacha::ChaCha20Rng::seed_from_u64`)
//! and standard normals come from `rand_distr::StandardNormal`, which uses
//! the ziggurat method. Draws are consumed class-major: for each class the
//! `d` components of the center offset, then for each of its samples the
//! `d` components of the within-class offset. Components are always drawn,
//! even when a covariance is exactly zero, so the stream layout depends only
//! on the shape of the spec.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data_stats::LabeledDataset;
use crate::error::{PldaError, Result};
use crate::spd_math::{cholesky, SymMatrix};

/// Ground-truth parameters and shape of a synthetic dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub mu: Vec<f64>,
    pub phi_b: SymMatrix,
    pub phi_w: SymMatrix,
    /// Sample count of each class; its length is the class count.
    pub samples_per_class: Vec<usize>,
    pub seed: u64,
}

impl SynthSpec {
    /// Spec with `num_classes` classes of `per_class` samples each.
    pub fn uniform(
        mu: Vec<f64>,
        phi_b: SymMatrix,
        phi_w: SymMatrix,
        num_classes: usize,
        per_class: usize,
        seed: u64,
    ) -> Self {
        Self { mu, phi_b, phi_w, samples_per_class: vec![per_class; num_classes], seed }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn num_classes(&self) -> usize {
        self.samples_per_class.len()
    }

    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim == 0 {
            return Err(PldaError::InvalidValue("dimension must be at least 1".into()));
        }
        for found in [self.phi_b.dim(), self.phi_w.dim()] {
            if found != dim {
                return Err(PldaError::DimensionMismatch { expected: dim, found });
            }
        }
        if self.num_classes() < 2 {
            return Err(PldaError::TooFewClasses(self.num_classes()));
        }
        if self.samples_per_class.contains(&0) {
            return Err(PldaError::InvalidValue("every class needs at least one sample".into()));
        }
        Ok(())
    }
}

/// Class label used for class index `k`.
pub fn class_label(k: usize) -> String {
    format!("class{k:05}")
}

/// Lower factor of a covariance, or `None` for an exactly-zero matrix.
fn sampling_factor(cov: &SymMatrix) -> Result<Option<Vec<f64>>> {
    if cov.as_slice().iter().all(|&v| v == 0.0) {
        return Ok(None);
    }
    Ok(Some(cholesky(cov)?.lower().to_vec()))
}

fn add_correlated(out: &mut [f64], factor: Option<&[f64]>, normals: &[f64]) {
    let Some(lower) = factor else { return };
    let d = out.len();
    for i in 0..d {
        out[i] += (0..=i).map(|k| lower[i * d + k] * normals[k]).sum::<f64>();
    }
}

/// Draws `y_k ~ N(μ, Φ_b)` per class and `z_ki ~ N(y_k, Φ_w)` per sample.
pub fn generate(spec: &SynthSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let dim = spec.dim();
    let between = sampling_factor(&spec.phi_b)?;
    let within = sampling_factor(&spec.phi_w)?;

    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut normals = vec![0.0; dim];
    let mut draw = |buf: &mut [f64]| {
        for v in buf.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
    };

    let mut data = LabeledDataset::new(dim);
    let mut center = vec![0.0; dim];
    let mut sample = vec![0.0; dim];
    for (k, &count) in spec.samples_per_class.iter().enumerate() {
        let label = class_label(k);
        center.copy_from_slice(&spec.mu);
        draw(&mut normals);
        add_correlated(&mut center, between.as_deref(), &normals);
        for _ in 0..count {
            sample.copy_from_slice(&center);
            draw(&mut normals);
            add_correlated(&mut sample, within.as_deref(), &normals);
            data.push(&label, &sample)?;
        }
    }
    Ok(data)
}

/// A well-conditioned random SPD matrix `GᵀG / d + I`, `G` standard normal,
/// drawn from its own ChaCha20 stream.
pub fn random_spd(dim: usize, seed: u64) -> SymMatrix {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let g: Vec<f64> = (0..dim * dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mut out = SymMatrix::identity(dim);
    for row in g.chunks(dim) {
        out.add_outer(row, 1.0 / dim as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_stats::accumulate_stats;

    #[test]
    fn zero_covariances_reproduce_mu() {
        let mu = vec![1.5, -2.0, 0.25];
        let spec = SynthSpec::uniform(mu.clone(), SymMatrix::zeros(3), SymMatrix::zeros(3), 4, 3, 9);
        let data = generate(&spec).unwrap();
        assert_eq!(data.len(), 12);
        for (_, v) in data.iter() {
            assert_eq!(v, mu.as_slice());
        }
    }

    #[test]
    fn seed_determinism() {
        let spec = SynthSpec::uniform(vec![0.0; 2], SymMatrix::identity(2), SymMatrix::identity(2), 5, 4, 17);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
        let c = generate(&SynthSpec { seed: 18, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn heterogeneous_class_sizes() {
        let spec = SynthSpec {
            mu: vec![0.0],
            phi_b: SymMatrix::identity(1),
            phi_w: SymMatrix::identity(1),
            samples_per_class: vec![1, 3, 2],
            seed: 0,
        };
        let stats = accumulate_stats(&generate(&spec).unwrap()).unwrap();
        let sizes: Vec<usize> = stats.classes.iter().map(|c| c.n).collect();
        assert_eq!(sizes, vec![1, 3, 2]);
    }

    #[test]
    fn rejects_invalid_specs() {
        let base = SynthSpec::uniform(vec![0.0; 2], SymMatrix::identity(2), SymMatrix::identity(2), 1, 3, 0);
        assert!(matches!(generate(&base), Err(PldaError::TooFewClasses(1))));
        let zero_n = SynthSpec { samples_per_class: vec![2, 0], ..base.clone() };
        assert!(generate(&zero_n).is_err());
        let bad_dim = SynthSpec { phi_w: SymMatrix::identity(3), samples_per_class: vec![2, 2], ..base.clone() };
        assert!(matches!(generate(&bad_dim), Err(PldaError::DimensionMismatch { .. })));
        let indefinite = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let not_pd = SynthSpec { phi_b: indefinite, samples_per_class: vec![2, 2], ..base };
        assert!(matches!(generate(&not_pd), Err(PldaError::NotPositiveDefinite { .. })));
    }

    #[test]
    fn random_spd_is_positive_definite_and_seeded() {
        let a = random_spd(6, 1);
        assert!(cholesky(&a).unwrap().min_pivot() > 0.0);
        assert_eq!(a, random_spd(6, 1));
        assert_ne!(a, random_spd(6, 2));
    }
}
