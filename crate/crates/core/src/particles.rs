//! Particle-set representation and the weight-space primitives shared by
//! every filter variant.

use crate::error::{Error, Result};

/// Additive guard inside the entropy logarithm.
pub const DEFAULT_EPS_LOG: f64 = 1e-12;

/// `N` particles in `dim`-dimensional space with a weight vector.
///
/// Positions are stored row-major: particle `i` occupies
/// `positions[i * dim .. (i + 1) * dim]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    positions: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
}

impl ParticleSet {
    pub fn new(positions: Vec<f64>, weights: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be at least 1"));
        }
        if positions.len() != weights.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: weights.len() * dim,
                actual: positions.len(),
            });
        }
        check_weights(&weights)?;
        Ok(Self {
            positions,
            weights,
            dim,
        })
    }

    /// Equal weights `1/N`.
    pub fn uniform(positions: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || !positions.len().is_multiple_of(dim) || positions.is_empty() {
            return Err(Error::invalid(
                "positions",
                format!("{} coordinates do not form rows of {dim}", positions.len()),
            ));
        }
        let n = positions.len() / dim;
        Self::new(positions, vec![1.0 / n as f64; n], dim)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn positions_mut(&mut self) -> &mut [f64] {
        &mut self.positions
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.positions.chunks_exact(self.dim)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) {
        assert_eq!(weights.len(), self.len(), "weight vector length");
        self.weights = weights;
    }

    pub fn reset_uniform_weights(&mut self) {
        let w = 1.0 / self.len() as f64;
        self.weights.iter_mut().for_each(|v| *v = w);
    }

    pub fn normalize(&mut self) -> Result<()> {
        self.weights = normalize_weights(&self.weights)?;
        Ok(())
    }

    pub fn mean(&self) -> Vec<f64> {
        weighted_mean(self)
    }

    pub fn ess(&self) -> f64 {
        effective_sample_size(&self.weights)
    }

    pub fn entropy(&self, eps_log: f64) -> f64 {
        shannon_entropy(&self.weights, eps_log)
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    match weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
    {
        Some((index, &value)) => Err(Error::NonFiniteWeight { index, value }),
        None => Ok(()),
    }
}

/// Rescales non-negative weights to sum to one.
pub fn normalize_weights(weights: &[f64]) -> Result<Vec<f64>> {
    check_weights(weights)?;
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::AllZeroWeights);
    }
    if !total.is_finite() {
        // Sum overflowed; rescale by the maximum first.
        let max = weights.iter().cloned().fold(0.0, f64::max);
        return normalize_weights(&weights.iter().map(|w| w / max).collect::<Vec<_>>());
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// `1 / Σ w_i²` for normalized weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// `−Σ w_i ln(w_i + eps_log)`, clamped at zero.
///
/// The guard lives inside the logarithm only, so the value never exceeds
/// `ln N`.
pub fn shannon_entropy(weights: &[f64], eps_log: f64) -> f64 {
    let h: f64 = weights
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| -w * (w + eps_log).ln())
        .sum();
    h.max(0.0)
}

/// Weighted average of the particle coordinates; also the point estimate.
pub fn weighted_mean(set: &ParticleSet) -> Vec<f64> {
    let mut mu = vec![0.0; set.dim()];
    for (x, w) in set.rows().zip(set.weights()) {
        for (m, v) in mu.iter_mut().zip(x) {
            *m += w * v;
        }
    }
    mu
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_weights(&[2.0, 2.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(
            normalize_weights(&[1.0, 0.0, 0.0, 0.0]).unwrap(),
            vec![1.0, 0.0, 0.0, 0.0]
        );
        let scaled = normalize_weights(&[0.7, 2.1, 4.2]).unwrap();
        for (a, b) in scaled.iter().zip([0.1, 0.3, 0.6]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_errors() {
        assert_eq!(normalize_weights(&[0.0, 0.0]), Err(Error::AllZeroWeights));
        assert!(matches!(
            normalize_weights(&[1.0, f64::NAN]),
            Err(Error::NonFiniteWeight { index: 1, .. })
        ));
        assert!(matches!(
            normalize_weights(&[f64::INFINITY]),
            Err(Error::NonFiniteWeight { index: 0, .. })
        ));
        assert!(matches!(
            normalize_weights(&[-1.0, 2.0]),
            Err(Error::NonFiniteWeight { index: 0, .. })
        ));
    }

    #[test]
    fn normalize_survives_overflowing_sum() {
        let w = normalize_weights(&[f64::MAX, f64::MAX]).unwrap();
        assert_eq!(w, vec![0.5, 0.5]);
    }

    #[test]
    fn ess_examples() {
        assert_abs_diff_eq!(effective_sample_size(&[0.01; 100]), 100.0, epsilon = 1e-9);
        assert_eq!(effective_sample_size(&[1.0, 0.0, 0.0, 0.0]), 1.0);
        assert_abs_diff_eq!(
            effective_sample_size(&[0.5, 0.25, 0.25]),
            1.0 / 0.375,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            effective_sample_size(&[0.5, 0.25, 0.25]),
            2.6667,
            epsilon = 1e-4
        );
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(
            shannon_entropy(&[1.0 / 400.0; 400], DEFAULT_EPS_LOG),
            5.9915,
            epsilon = 1e-3
        );
        assert_abs_diff_eq!(
            shannon_entropy(&[1.0, 0.0, 0.0, 0.0], DEFAULT_EPS_LOG),
            0.0,
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            shannon_entropy(&[0.25; 4], DEFAULT_EPS_LOG),
            4f64.ln(),
            epsilon = 1e-6
        );
    }

    #[test]
    fn mean_examples() {
        let s = ParticleSet::new(vec![0.0, 2.0], vec![0.5, 0.5], 1).unwrap();
        assert_eq!(weighted_mean(&s), vec![1.0]);
        let s = ParticleSet::new(vec![0.0, 2.0], vec![1.0, 0.0], 1).unwrap();
        assert_eq!(weighted_mean(&s), vec![0.0]);
        let s = ParticleSet::new(vec![0.0, 0.0, 4.0, 2.0], vec![0.25, 0.75], 2).unwrap();
        assert_eq!(weighted_mean(&s), vec![3.0, 1.5]);
    }

    #[test]
    fn constructor_checks_shape() {
        assert!(ParticleSet::new(vec![0.0; 5], vec![0.5, 0.5], 2).is_err());
        assert!(ParticleSet::new(vec![0.0; 4], vec![0.5, f64::NAN], 2).is_err());
        assert!(ParticleSet::uniform(vec![], 1).is_err());
    }

    fn weight_vec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.0f64..10.0, 1..60)
            .prop_filter("some mass", |w| w.iter().any(|v| *v > 1e-6))
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(w in weight_vec()) {
            let once = normalize_weights(&w).unwrap();
            let twice = normalize_weights(&once).unwrap();
            prop_assert!((once.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn ess_and_entropy_bounds(w in weight_vec()) {
            let w = normalize_weights(&w).unwrap();
            let n = w.len() as f64;
            let ess = effective_sample_size(&w);
            prop_assert!(ess >= 1.0 - 1e-9 && ess <= n + 1e-9);
            let h = shannon_entropy(&w, DEFAULT_EPS_LOG);
            prop_assert!(h >= 0.0 && h <= n.ln() + n * DEFAULT_EPS_LOG);
            prop_assert!(h <= shannon_entropy(&vec![1.0 / n; w.len()], DEFAULT_EPS_LOG) + 1e-12);
        }

        #[test]
        fn ess_equals_n_only_for_uniform(n in 1usize..50, bump in 1e-3f64..1.0) {
            let uniform = vec![1.0 / n as f64; n];
            prop_assert!((effective_sample_size(&uniform) - n as f64).abs() < 1e-9);
            if n > 1 {
                let mut w = vec![1.0; n];
                w[0] += bump;
                let w = normalize_weights(&w).unwrap();
                prop_assert!(effective_sample_size(&w) < n as f64 - 1e-9);
            }
        }

        #[test]
        fn mean_is_permutation_invariant(
            rows in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0, 0.01f64..1.0), 2..30),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let build = |rs: &[(f64, f64, f64)]| {
                let pos = rs.iter().flat_map(|r| [r.0, r.1]).collect();
                let w = normalize_weights(&rs.iter().map(|r| r.2).collect::<Vec<_>>()).unwrap();
                ParticleSet::new(pos, w, 2).unwrap()
            };
            let mut shuffled = rows.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = weighted_mean(&build(&rows));
            let b = weighted_mean(&build(&shuffled));
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
