//! Dense symmetric positive-definite matrix kernel.
//!
//! Matrices are stored row-major as flat `f64` buffers. Every inversion and
//! log-determinant goes through a Cholesky factor; nothing in this module
//! regularizes silently, so a failed factorization is always reported to the
//! caller as [`PldaError::NotPositiveDefinite`].

use std::fmt;

use crate::error::{PldaError, Result};

/// Entry-wise tolerance used when validating symmetry of caller-provided data.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// A square symmetric matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SymMatrix ")?;
        f.debug_list().entries(self.data.chunks(self.dim)).finish()
    }
}

impl SymMatrix {
    /// # Panics
    /// Panics if `dim == 0`.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = value;
        }
        m
    }

    /// # Panics
    /// Panics if `diag` is empty.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting input that is not
    /// symmetric within [`SYMMETRY_TOLERANCE`]. The accepted matrix is
    /// symmetrized so that storage is exactly symmetric.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(PldaError::InvalidValue("matrix dimension must be at least 1".into()));
        }
        if data.len() != dim * dim {
            return Err(PldaError::DimensionMismatch { expected: dim * dim, found: data.len() });
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(PldaError::InvalidValue(format!("non-finite matrix entry at ({}, {})", bad / dim, bad % dim)));
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let gap = (data[i * dim + j] - data[j * dim + i]).abs();
                if gap > SYMMETRY_TOLERANCE {
                    return Err(PldaError::NotSymmetric { row: i, col: j, gap });
                }
            }
        }
        Ok(symmetrize(dim, &data))
    }

    /// Builds a matrix from a slice of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if let Some(row) = rows.iter().find(|r| r.len() != dim) {
            return Err(PldaError::DimensionMismatch { expected: dim, found: row.len() });
        }
        Self::from_row_major(dim, rows.concat())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.dim + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Largest `|a_ij - a_ji|` in storage.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|v| v * factor).collect() }
    }

    /// # Panics
    /// Panics on dimension mismatch.
    pub fn add(&self, other: &SymMatrix) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    /// # Panics
    /// Panics on dimension mismatch.
    pub fn sub(&self, other: &SymMatrix) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &SymMatrix, op: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        Self { dim: self.dim, data: self.data.iter().zip(&other.data).map(|(&a, &b)| op(a, b)).collect() }
    }

    pub fn add_assign(&mut self, other: &SymMatrix) {
        assert_eq!(self.dim, other.dim, "matrix dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Adds `value` to every diagonal entry.
    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.dim {
            self.data[i * self.dim + i] += value;
        }
    }

    /// `self += weight * v vᵀ`. Storage stays exactly symmetric because each
    /// entry is computed as `weight * (v_i * v_j)`.
    pub fn add_outer(&mut self, v: &[f64], weight: f64) {
        assert_eq!(v.len(), self.dim, "vector dimension mismatch");
        for i in 0..self.dim {
            let row = &mut self.data[i * self.dim..(i + 1) * self.dim];
            for j in 0..self.dim {
                row[j] += weight * (v[i] * v[j]);
            }
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim, "vector dimension mismatch");
        self.data.chunks(self.dim).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// `vᵀ A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.matvec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

/// Returns `(a + aᵀ) / 2` for a square row-major buffer.
///
/// # Panics
/// Panics if `dim == 0` or `a.len() != dim * dim`.
pub fn symmetrize(dim: usize, a: &[f64]) -> SymMatrix {
    assert!(dim >= 1, "matrix dimension must be at least 1");
    assert_eq!(a.len(), dim * dim, "buffer is not {dim}x{dim}");
    let mut data = vec![0.0; dim * dim];
    for i in 0..dim {
        data[i * dim + i] = a[i * dim + i];
        for j in (i + 1)..dim {
            let v = 0.5 * (a[i * dim + j] + a[j * dim + i]);
            data[i * dim + j] = v;
            data[j * dim + i] = v;
        }
    }
    SymMatrix { dim, data }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    dim: usize,
    lower: Vec<f64>,
}

impl Cholesky {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major lower factor; entries above the diagonal are zero.
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    #[inline]
    fn l(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// Squared diagonal entries of `L`, i.e. the elimination pivots.
    pub fn pivots(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dim).map(|i| self.l(i, i) * self.l(i, i))
    }

    pub fn min_pivot(&self) -> f64 {
        self.pivots().fold(f64::INFINITY, f64::min)
    }

    pub fn max_pivot(&self) -> f64 {
        self.pivots().fold(0.0, f64::max)
    }

    /// `log |A| = 2 Σ log L_ii`.
    pub fn logdet(&self) -> f64 {
        2.0 * (0..self.dim).map(|i| self.l(i, i).ln()).sum::<f64>()
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim, "vector dimension mismatch");
        let mut y = b.to_vec();
        for i in 0..self.dim {
            let acc = y[i] - (0..i).map(|k| self.l(i, k) * y[k]).sum::<f64>();
            y[i] = acc / self.l(i, i);
        }
        y
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.solve_lower(b);
        for i in (0..self.dim).rev() {
            let acc = x[i] - ((i + 1)..self.dim).map(|k| self.l(k, i) * x[k]).sum::<f64>();
            x[i] = acc / self.l(i, i);
        }
        x
    }

    /// `bᵀ A⁻¹ b`, computed as `|L⁻¹ b|²`.
    pub fn inv_quad_form(&self, b: &[f64]) -> f64 {
        self.solve_lower(b).iter().map(|v| v * v).sum()
    }

    /// `A⁻¹ = L⁻ᵀ L⁻¹`, symmetrized.
    pub fn inverse(&self) -> SymMatrix {
        let d = self.dim;
        // Column j of L⁻¹ solves L x = e_j; store L⁻¹ row-major.
        let mut linv = vec![0.0; d * d];
        for j in 0..d {
            linv[j * d + j] = 1.0 / self.l(j, j);
            for i in (j + 1)..d {
                let mut acc = 0.0;
                for k in j..i {
                    acc -= self.l(i, k) * linv[k * d + j];
                }
                linv[i * d + j] = acc / self.l(i, i);
            }
        }
        let mut inv = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let mut acc = 0.0;
                for k in j..d {
                    acc += linv[k * d + i] * linv[k * d + j];
                }
                inv[i * d + j] = acc;
                inv[j * d + i] = acc;
            }
        }
        symmetrize(d, &inv)
    }

    /// Reconstructs `L Lᵀ`.
    pub fn reconstruct(&self) -> SymMatrix {
        let d = self.dim;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let v: f64 = (0..=j).map(|k| self.l(i, k) * self.l(j, k)).sum();
                out[i * d + j] = v;
                out[j * d + i] = v;
            }
        }
        SymMatrix { dim: d, data: out }
    }
}

/// Cholesky factorization. Fails on the first pivot that is not strictly
/// positive (or not finite).
pub fn cholesky(a: &SymMatrix) -> Result<Cholesky> {
    let d = a.dim();
    let mut lower = vec![0.0; d * d];
    for j in 0..d {
        let mut pivot = a.get(j, j);
        for k in 0..j {
            pivot -= lower[j * d + k] * lower[j * d + k];
        }
        if !(pivot.is_finite() && pivot > 0.0) {
            return Err(PldaError::NotPositiveDefinite { row: j, value: pivot });
        }
        let diag = pivot.sqrt();
        lower[j * d + j] = diag;
        for i in (j + 1)..d {
            let mut acc = a.get(i, j);
            for k in 0..j {
                acc -= lower[i * d + k] * lower[j * d + k];
            }
            lower[i * d + j] = acc / diag;
        }
    }
    Ok(Cholesky { dim: d, lower })
}

pub fn inverse_spd(a: &SymMatrix) -> Result<SymMatrix> {
    Ok(cholesky(a)?.inverse())
}

pub fn logdet_spd(a: &SymMatrix) -> Result<f64> {
    Ok(cholesky(a)?.logdet())
}
