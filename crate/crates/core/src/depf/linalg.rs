//! Dense symmetric-matrix helpers for the kernel perturbation: weighted
//! covariance, Cholesky factorisation and triangular solves.

use crate::error::{Error, Result};
use crate::particles::ParticleSet;

/// Row-major `n × n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// Builds from rows; panics if they are not square.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        Self {
            n,
            data: rows.concat(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self · selfᵀ`.
    pub fn mul_transpose_self(&self) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n).map(|k| self[(i, k)] * self[(j, k)]).sum();
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// `Σ w_i (x_i − μ)(x_i − μ)ᵀ + λ I` around the weighted mean `μ`.
pub fn weighted_covariance(set: &ParticleSet, lambda_reg: f64) -> Matrix {
    let n = set.dim();
    let mu = set.mean();
    let mut sigma = Matrix::zeros(n);
    let mut centered = vec![0.0; n];
    for (x, w) in set.rows().zip(set.weights()) {
        for k in 0..n {
            centered[k] = x[k] - mu[k];
        }
        for i in 0..n {
            let wi = w * centered[i];
            for j in 0..=i {
                sigma[(i, j)] += wi * centered[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            sigma[(j, i)] = sigma[(i, j)];
        }
        sigma[(i, i)] += lambda_reg;
    }
    sigma
}

/// Lower-triangular `L` with positive diagonal and `L Lᵀ = sigma`.
pub fn cholesky_lower(sigma: &Matrix) -> Result<Matrix> {
    let n = sigma.dim();
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut d = sigma[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..n {
            let mut s = sigma[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L y = b` in place by forward substitution.
pub fn forward_substitute(l: &Matrix, b: &mut [f64]) {
    let n = l.dim();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// `vᵀ Σ⁻¹ v` for `Σ = L Lᵀ`, without forming the inverse.
pub fn mahalanobis_sq(l: &Matrix, v: &[f64]) -> f64 {
    let mut y = v.to_vec();
    forward_substitute(l, &mut y);
    y.iter().map(|t| t * t).sum()
}

/// `out = L z`.
pub fn lower_mul(l: &Matrix, z: &[f64], out: &mut [f64]) {
    let n = l.dim();
    for i in 0..n {
        out[i] = (0..=i).map(|k| l[(i, k)] * z[k]).sum();
    }
}
