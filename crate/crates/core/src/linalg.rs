//! Small dense helpers for symmetric positive definite matrices.

use nalgebra::{Cholesky, DMatrix, DVector};
use smallvec::SmallVec;

use crate::error::{OclustError, Result};

type Scratch = SmallVec<[f64; 8]>;

/// Cholesky factor `Σ = L L'` kept in a flat row-major buffer for allocation-free
/// quadratic forms in the hot loops.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    p: usize,
    lower: Vec<f64>,
    log_det: f64,
}

impl SpdFactor {
    pub fn new(sigma: &DMatrix<f64>) -> Result<Self> {
        let p = sigma.nrows();
        if p == 0 || sigma.ncols() != p {
            return Err(OclustError::DimensionMismatch { expected: p, actual: sigma.ncols() });
        }
        if sigma.iter().any(|v| !v.is_finite()) {
            return Err(OclustError::SingularCovariance);
        }
        let chol = Cholesky::new(sigma.clone()).ok_or(OclustError::SingularCovariance)?;
        let l = chol.l();
        let mut lower = vec![0.0; p * p];
        let mut log_det = 0.0;
        for i in 0..p {
            for j in 0..=i {
                lower[i * p + j] = l[(i, j)];
            }
            let d = l[(i, i)];
            if !(d > 0.0) {
                return Err(OclustError::SingularCovariance);
            }
            log_det += 2.0 * d.ln();
        }
        if !log_det.is_finite() {
            return Err(OclustError::SingularCovariance);
        }
        Ok(Self { p, lower, log_det })
    }

    /// Factor `sigma`; on failure add `reg_eps * trace / p` to the diagonal and retry once.
    /// Returns the factor and the matrix that was actually factored.
    pub fn regularized(sigma: &DMatrix<f64>, reg_eps: f64) -> Result<(Self, DMatrix<f64>)> {
        match Self::new(sigma) {
            Ok(f) => Ok((f, sigma.clone())),
            Err(e) if reg_eps <= 0.0 => Err(e),
            Err(_) => {
                let p = sigma.nrows();
                let ridge = reg_eps * sigma.trace() / p as f64;
                if !(ridge > 0.0) || !ridge.is_finite() {
                    return Err(OclustError::SingularCovariance);
                }
                let mut bumped = sigma.clone();
                for i in 0..p {
                    bumped[(i, i)] += ridge;
                }
                let f = Self::new(&bumped)?;
                Ok((f, bumped))
            }
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.p
    }

    /// `log |Σ|`.
    #[inline]
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// `(x - mu)' Σ^{-1} (x - mu)` by forward substitution.
    #[inline]
    pub fn mahalanobis_sq(&self, x: &[f64], mu: &[f64]) -> f64 {
        let p = self.p;
        let mut z: Scratch = SmallVec::from_elem(0.0, p);
        let mut acc = 0.0;
        for i in 0..p {
            let row = &self.lower[i * p..i * p + i];
            let mut s = x[i] - mu[i];
            for (lij, zj) in row.iter().zip(z.iter()) {
                s -= lij * zj;
            }
            let zi = s / self.lower[i * p + i];
            z[i] = zi;
            acc += zi * zi;
        }
        acc
    }

    /// `L z`, used to colour standard normal draws.
    pub fn mul_lower(&self, z: &[f64], out: &mut [f64]) {
        let p = self.p;
        for i in 0..p {
            let row = &self.lower[i * p..=i * p + i];
            out[i] = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
    }
}

pub fn to_vector(x: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(x)
}

/// Symmetrise in place; accumulated rounding in outer-product sums breaks exact symmetry.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let p = m.nrows();
    for i in 0..p {
        for j in (i + 1)..p {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}
