//! Constant Hermitian ambient metrics on C^n.
//!
//! Only constant positive-definite Hermitian matrices are supported; these
//! ambient metrics are automatically Kaehler and flat, which is what makes
//! the Gauss-equation cross-check `K = -2 |B|^2` exact.

use crate::{Error, Result};
use num_complex::Complex64;

/// A constant Hermitian positive-definite metric `<u, v> = v* H u` on C^n.
#[derive(Debug, Clone)]
pub struct AmbientMetric {
    dim: usize,
    h: Vec<Complex64>, // row-major
    identity: bool,
}

impl AmbientMetric {
    pub fn identity(dim: usize) -> Self {
        let mut h = vec![Complex64::new(0.0, 0.0); dim * dim];
        for j in 0..dim {
            h[j * dim + j] = Complex64::new(1.0, 0.0);
        }
        Self {
            dim,
            h,
            identity: true,
        }
    }

    /// Builds a metric from matrix rows, verifying Hermitian symmetry and
    /// positive definiteness (by Cholesky factorization).
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Argument(
                "hermitian matrix must be square and nonempty".into(),
            ));
        }
        let mut h = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (j, row) in rows.iter().enumerate() {
            for (k, &e) in row.iter().enumerate() {
                h[j * dim + k] = e;
            }
        }
        let scale = h.iter().map(|c| c.norm()).fold(0.0_f64, f64::max).max(1.0);
        for j in 0..dim {
            for k in 0..dim {
                if (h[j * dim + k] - h[k * dim + j].conj()).norm() > 1e-12 * scale {
                    return Err(Error::Argument(format!(
                        "matrix is not Hermitian at entry ({j},{k})"
                    )));
                }
            }
        }
        let m = Self {
            dim,
            h,
            identity: false,
        };
        if !m.is_positive_definite() {
            return Err(Error::Argument(
                "hermitian matrix is not positive definite".into(),
            ));
        }
        let identity = m
            .h
            .iter()
            .enumerate()
            .all(|(i, c)| (c - if i % (dim + 1) == 0 { 1.0 } else { 0.0 }).norm() == 0.0);
        Ok(Self { identity, ..m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.h[j * self.dim + k]
    }

    /// Hermitian product `<u, v> = v* H u` (linear in `u`).
    pub fn inner(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        debug_assert_eq!(u.len(), self.dim);
        debug_assert_eq!(v.len(), self.dim);
        if self.identity {
            return u.iter().zip(v).map(|(a, b)| a * b.conj()).sum();
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, vj) in v.iter().enumerate() {
            let row: Complex64 = self.h[j * self.dim..(j + 1) * self.dim]
                .iter()
                .zip(u)
                .map(|(h, uk)| h * uk)
                .sum();
            acc += vj.conj() * row;
        }
        acc
    }

    pub fn norm_sq(&self, v: &[Complex64]) -> f64 {
        self.inner(v, v).re
    }

    pub fn norm(&self, v: &[Complex64]) -> f64 {
        self.norm_sq(v).max(0.0).sqrt()
    }

    /// H-orthogonal projection of `w` onto the complement of the complex
    /// line spanned by `v` (`v` must be nonzero).
    pub fn project_out(&self, w: &[Complex64], v: &[Complex64]) -> Vec<Complex64> {
        let coeff = self.inner(w, v) / self.inner(v, v);
        w.iter().zip(v).map(|(a, b)| a - coeff * b).collect()
    }

    fn is_positive_definite(&self) -> bool {
        // complex Cholesky; fails on a nonpositive pivot
        let n = self.dim;
        let mut l = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let mut diag = self.h[j * n + j].re;
            for k in 0..j {
                diag -= l[j * n + k].norm_sqr();
            }
            if diag <= 0.0 || !diag.is_finite() {
                return false;
            }
            let d = diag.sqrt();
            l[j * n + j] = Complex64::new(d, 0.0);
            for i in j + 1..n {
                let mut s = self.h[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k].conj();
                }
                l[i * n + j] = s / d;
            }
        }
        true
    }
}
