//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's linear algebra.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use plda::{LabeledDataset, SymMatrix};

/// Posterior mean and variance of `x` under `N(x|0, phi_b) · N(x|m, phi_w/n)`
/// by Riemann summation on `[-10, 10]` with step `1e-4`.
pub fn quadrature_posterior(phi_b: f64, phi_w: f64, n: usize, m: f64) -> (f64, f64) {
    let step = 1e-4;
    let steps = (20.0 / step) as usize;
    let var_y = phi_w / n as f64;
    let log_density = |x: f64| -0.5 * x * x / phi_b - 0.5 * (x - m) * (x - m) / var_y;
    let peak = (0..=steps).map(|i| log_density(-10.0 + i as f64 * step)).fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for i in 0..=steps {
        let x = -10.0 + i as f64 * step;
        let p = (log_density(x) - peak).exp();
        z += p;
        s1 += p * x;
        s2 += p * x * x;
    }
    let mean = s1 / z;
    (mean, s2 / z - mean * mean)
}

pub fn to_na(m: &SymMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.dim(), m.dim(), m.as_slice())
}

/// Log-density of every sample jointly, from the full `N·d` covariance with
/// blocks `Φ_b + δ_ij Φ_w` for samples in the same class and zero otherwise.
pub fn joint_gaussian_log_density(data: &LabeledDataset, mu: &[f64], phi_b: &SymMatrix, phi_w: &SymMatrix) -> f64 {
    let d = data.dim();
    let n = data.len();
    let total = n * d;
    let (b, w) = (to_na(phi_b), to_na(phi_w));
    let mut cov = DMatrix::<f64>::zeros(total, total);
    for i in 0..n {
        for j in 0..n {
            if data.label_index(i) != data.label_index(j) {
                continue;
            }
            let mut block = b.clone();
            if i == j {
                block += &w;
            }
            cov.view_mut((i * d, j * d), (d, d)).copy_from(&block);
        }
    }
    let x = DVector::from_iterator(
        total,
        (0..n).flat_map(|i| data.vector(i).iter().zip(mu).map(|(v, m)| v - m).collect::<Vec<_>>()),
    );
    let chol = cov.cholesky().expect("joint covariance must be positive definite");
    let logdet = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let quad = x.dot(&chol.solve(&x));
    -0.5 * (total as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + quad)
}

/// Sample covariance (divide by count) of row vectors about their mean.
pub fn sample_covariance(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let d = rows[0].len();
    let n = rows.len() as f64;
    let mean = rows.iter().fold(DVector::zeros(d), |acc, r| acc + DVector::from_column_slice(r)) / n;
    let mut cov = DMatrix::zeros(d, d);
    for r in rows {
        let c = DVector::from_column_slice(r) - &mean;
        cov += &c * c.transpose();
    }
    cov / n
}

pub fn rel_frobenius(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> f64 {
    (estimate - truth).norm() / truth.norm()
}

pub fn rel_frobenius_sym(estimate: &SymMatrix, truth: &SymMatrix) -> f64 {
    rel_frobenius(&to_na(estimate), &to_na(truth))
}
