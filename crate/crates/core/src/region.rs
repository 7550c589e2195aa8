use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed axis-aligned box `[lo_k, hi_k]` in each coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                actual: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::invalid("region", "zero-dimensional box"));
        }
        for (k, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::invalid(
                    "region",
                    format!("axis {k} has non-positive side [{a}, {b}]"),
                ));
            }
        }
        Ok(Self { lo, hi })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.side(k)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn contains_region(&self, other: &Region) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    /// Writes one uniform sample into `out`.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for (k, v) in out.iter_mut().enumerate() {
            *v = self.lo[k] + rng.random::<f64>() * self.side(k);
        }
    }

    /// Maps `u ∈ [0,1]^n` affinely onto the box.
    pub fn from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .enumerate()
            .map(|(k, t)| self.lo[k] + t * self.side(k))
            .collect()
    }

    pub fn to_unit(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, v)| (v - self.lo[k]) / self.side(k))
            .collect()
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (k, v) in x.iter_mut().enumerate() {
            *v = v.clamp(self.lo[k], self.hi[k]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_degenerate_sides() {
        assert!(Region::new(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(Region::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn membership_is_closed() {
        let r = Region::cube(2, 0.0, 5.0).unwrap();
        assert!(r.contains(&[0.0, 5.0]));
        assert!(!r.contains(&[6.0, 1.0]));
        assert!(!r.contains(&[1.0]));
        assert_eq!(r.volume(), 25.0);
    }
}
