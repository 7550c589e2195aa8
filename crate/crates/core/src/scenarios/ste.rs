//! Source term estimation: a mobile sensor looks for a point release in a
//! 20 × 20 domain, choosing each move by expected KL information gain.
//!
//! Dispersion is the isotropic stand-in `c(θ, s) = q / (‖s − θ‖² + c₀)` with
//! `q = 1`, `c₀ = 0.5`, observed through multiplicative log-normal noise.

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{euclidean, FilterSettings, Stepper, Variant};
use crate::error::{Error, Result};
use crate::metrics::TrialTrace;
use crate::particles::ParticleSet;
use crate::priors::{sample_prior, PriorKind, PriorSpec};
use crate::region::Region;
use crate::rng::TrialRng;

/// Unit moves: E, NE, N, NW, W, SW, S, SE, then stay. Diagonals are
/// normalised to the same step length.
pub const ACTION_DIRECTIONS: [[f64; 2]; 9] = {
    const D: f64 = std::f64::consts::FRAC_1_SQRT_2;
    [
        [1.0, 0.0],
        [D, D],
        [0.0, 1.0],
        [-D, D],
        [-1.0, 0.0],
        [-D, -D],
        [0.0, -1.0],
        [D, -D],
        [0.0, 0.0],
    ]
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteConfig {
    pub domain: Region,
    pub source_region: Region,
    pub agent_start_region: Region,
    /// Prior area as a fraction of the domain area.
    pub priori_scope: f64,
    pub prior_kind: PriorKind,
    /// Used verbatim instead of `prior_kind` + `priori_scope` when set.
    pub prior_override: Option<PriorSpec>,
    pub max_steps: usize,
    pub success_radius: f64,
    /// Standard deviation of the log-reading noise.
    pub sensor_noise_std: f64,
    pub kl_mc_samples: usize,
    pub release_rate: f64,
    pub c0: f64,
    pub step_length: f64,
    /// Fixed source instead of a uniform draw from `source_region`.
    pub source: Option<[f64; 2]>,
}

impl Default for SteConfig {
    fn default() -> Self {
        let square = |lo, hi| Region::cube(2, lo, hi).expect("valid square");
        Self {
            domain: square(0.0, 20.0),
            source_region: square(10.0, 15.0),
            agent_start_region: square(0.0, 5.0),
            priori_scope: 0.3,
            prior_kind: PriorKind::Gaussian,
            prior_override: None,
            max_steps: 150,
            success_radius: 0.5,
            sensor_noise_std: 0.05,
            kl_mc_samples: 32,
            release_rate: 1.0,
            c0: 0.5,
            step_length: 1.0,
            source: None,
        }
    }
}

impl SteConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("domain", &self.domain),
            ("source_region", &self.source_region),
            ("agent_start_region", &self.agent_start_region),
        ] {
            if r.dim() != 2 {
                return Err(Error::invalid(name, "must be two-dimensional"));
            }
        }
        if !self.domain.contains_region(&self.source_region) {
            return Err(Error::invalid(
                "source_region",
                "must lie inside the domain",
            ));
        }
        if !self.domain.contains_region(&self.agent_start_region) {
            return Err(Error::invalid(
                "agent_start_region",
                "must lie inside the domain",
            ));
        }
        if !(self.priori_scope > 0.0 && self.priori_scope <= 1.0) {
            return Err(Error::invalid(
                "scopes",
                format!("{} outside (0, 1]", self.priori_scope),
            ));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be at least 1"));
        }
        for (name, v) in [
            ("success_radius", self.success_radius),
            ("sensor_noise_std", self.sensor_noise_std),
            ("release_rate", self.release_rate),
            ("c0", self.c0),
            ("step_length", self.step_length),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be positive"));
            }
        }
        if self.kl_mc_samples == 0 {
            return Err(Error::invalid("kl_mc_samples", "must be at least 1"));
        }
        if let Some(p) = &self.prior_override {
            if p.dim() != 2 {
                return Err(Error::invalid("prior", "must be two-dimensional"));
            }
        }
        Ok(())
    }

    /// Square of area `priori_scope × domain area`, centred on the agent
    /// start region and then translated (not clipped) to fit the domain.
    pub fn prior_region(&self) -> Result<Region> {
        let side = (self.priori_scope * self.domain.volume()).sqrt();
        let center = self.agent_start_region.center();
        let mut lo = vec![0.0; 2];
        for k in 0..2 {
            if side > self.domain.side(k) {
                return Err(Error::invalid(
                    "scopes",
                    format!(
                        "a square of scope {} does not fit the domain",
                        self.priori_scope
                    ),
                ));
            }
            lo[k] = (center[k] - side / 2.0).clamp(self.domain.lo[k], self.domain.hi[k] - side);
        }
        let hi = lo.iter().map(|v| v + side).collect();
        Region::new(lo, hi)
    }

    pub fn prior(&self) -> Result<PriorSpec> {
        match &self.prior_override {
            Some(p) => Ok(p.clone()),
            None => self.prior_kind.build(&self.prior_region()?),
        }
    }

    /// Noise-free concentration at `sensor` from a source at `theta`.
    pub fn mean_concentration(&self, theta: &[f64], sensor: &[f64]) -> f64 {
        let dx = sensor[0] - theta[0];
        let dy = sensor[1] - theta[1];
        self.release_rate / (dx * dx + dy * dy + self.c0)
    }
}

/// One noisy reading `c · exp(η)`, `η ~ N(0, sensor_noise_std²)`.
pub fn ste_observation<R: Rng + ?Sized>(
    source: &[f64],
    sensor: &[f64],
    cfg: &SteConfig,
    rng: &mut R,
) -> f64 {
    let c = cfg.mean_concentration(source, sensor);
    if cfg.sensor_noise_std == 0.0 {
        return c;
    }
    let eta: f64 = rng.sample(StandardNormal);
    c * (cfg.sensor_noise_std * eta).exp()
}

/// Log-normal density of the reading `z` given a source at `theta`.
pub fn ste_likelihood(theta: &[f64], z: f64, sensor: &[f64], cfg: &SteConfig) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::NonPositiveReading(z));
    }
    let s = cfg.sensor_noise_std;
    let r = (z.ln() - cfg.mean_concentration(theta, sensor).ln()) / s;
    Ok((-0.5 * r * r).exp() / (z * s * (2.0 * std::f64::consts::PI).sqrt()))
}

/// [`ste_likelihood`] without the factors that depend only on `z`; lies in
/// `(0, 1]` and is what the filter multiplies into its weights.
fn likelihood_kernel(log_z: f64, log_c: f64, noise_std: f64) -> f64 {
    let r = (log_z - log_c) / noise_std;
    (-0.5 * r * r).exp()
}

/// Simulated readings shared by every candidate action: a particle drawn
/// from the belief (by inverse CDF of `u`) and a standard-normal noise draw.
#[derive(Debug, Clone)]
pub struct KlSamples {
    draws: Vec<(f64, f64)>,
}

impl KlSamples {
    pub fn draw<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Self {
        Self {
            draws: (0..count)
                .map(|_| (rng.random::<f64>(), rng.sample::<f64, _>(StandardNormal)))
                .collect(),
        }
    }
}

fn inverse_cdf(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

/// `Σ w'ᵢ ln(w'ᵢ / wᵢ)` over the particles with `wᵢ > 0`.
pub fn kl_divergence(updated: &[f64], current: &[f64]) -> f64 {
    updated
        .iter()
        .zip(current)
        .filter(|(p, q)| **p > 0.0 && **q > 0.0)
        .map(|(p, q)| p * (p / q).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Monte Carlo estimate of the expected KL gain of measuring at `sensor`.
pub fn expected_kl_utility_with(
    set: &ParticleSet,
    sensor: &[f64],
    cfg: &SteConfig,
    samples: &KlSamples,
) -> f64 {
    let weights = set.weights();
    let log_c: Vec<f64> = set
        .rows()
        .map(|x| cfg.mean_concentration(x, sensor).ln())
        .collect();
    let mut updated = vec![0.0; set.len()];
    let mut total_kl = 0.0;
    for &(u, eta) in &samples.draws {
        let j = inverse_cdf(weights, u);
        let log_z = log_c[j] + cfg.sensor_noise_std * eta;
        let mut mass = 0.0;
        for ((o, w), lc) in updated.iter_mut().zip(weights).zip(&log_c) {
            *o = w * likelihood_kernel(log_z, *lc, cfg.sensor_noise_std);
            mass += *o;
        }
        if mass > 0.0 {
            updated.iter_mut().for_each(|o| *o /= mass);
            total_kl += kl_divergence(&updated, weights);
        }
    }
    total_kl / samples.draws.len() as f64
}

pub fn expected_kl_utility<R: Rng + ?Sized>(
    set: &ParticleSet,
    sensor: &[f64],
    cfg: &SteConfig,
    rng: &mut R,
) -> f64 {
    let samples = KlSamples::draw(cfg.kl_mc_samples, rng);
    expected_kl_utility_with(set, sensor, cfg, &samples)
}

/// Index of the first maximal finite utility; `None` entries are infeasible.
pub fn argmax_action(utilities: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, u) in utilities.iter().enumerate() {
        if let Some(u) = u {
            if best.is_none_or(|(_, b)| *u > b) {
                best = Some((i, *u));
            }
        }
    }
    best.map(|(i, _)| i)
}

pub fn next_position(agent: &[f64], action: usize, cfg: &SteConfig) -> [f64; 2] {
    let d = ACTION_DIRECTIONS[action];
    [
        agent[0] + cfg.step_length * d[0],
        agent[1] + cfg.step_length * d[1],
    ]
}

/// Utility of every action (`None` where the move leaves the domain) and the
/// chosen action. All actions are scored against the same simulated readings.
pub fn select_action<R: Rng + ?Sized>(
    set: &ParticleSet,
    agent: &[f64],
    cfg: &SteConfig,
    rng: &mut R,
) -> (usize, Vec<Option<f64>>) {
    let samples = KlSamples::draw(cfg.kl_mc_samples, rng);
    let utilities: Vec<Option<f64>> = (0..ACTION_DIRECTIONS.len())
        .map(|a| {
            let p = next_position(agent, a, cfg);
            cfg.domain
                .contains(&p)
                .then(|| expected_kl_utility_with(set, &p, cfg, &samples))
        })
        .collect();
    // Staying put is always feasible.
    let action = argmax_action(&utilities).unwrap_or(ACTION_DIRECTIONS.len() - 1);
    (action, utilities)
}

/// Agent path and source of one trial, next to its metric trace.
#[derive(Debug, Clone, PartialEq)]
pub struct SteRun {
    pub trace: TrialTrace,
    pub source: [f64; 2],
    pub path: Vec<[f64; 2]>,
}

pub fn run_ste_trial(
    cfg: &SteConfig,
    variant: Variant,
    settings: &FilterSettings,
    seed: u64,
) -> Result<TrialTrace> {
    run_ste_trial_detailed(cfg, variant, settings, seed).map(|r| r.trace)
}

pub fn run_ste_trial_detailed(
    cfg: &SteConfig,
    variant: Variant,
    settings: &FilterSettings,
    seed: u64,
) -> Result<SteRun> {
    cfg.validate()?;
    let stepper = Stepper::new(variant, settings, cfg.domain.clone())?;
    let mut rng = TrialRng::seed_from_u64(seed);

    let source = match cfg.source {
        Some(s) => s,
        None => {
            let mut s = [0.0; 2];
            cfg.source_region.sample_into(&mut rng, &mut s);
            s
        }
    };
    let mut agent = [0.0; 2];
    cfg.agent_start_region.sample_into(&mut rng, &mut agent);
    let positions = sample_prior(&cfg.prior()?, settings.num_particles, &mut rng)?;
    let mut set = ParticleSet::uniform(positions, 2)?;

    let mut trace = TrialTrace::with_capacity(cfg.max_steps);
    let mut path = vec![agent];
    let mut success = false;
    for _ in 0..cfg.max_steps {
        let (action, _) = select_action(&set, &agent, cfg, &mut rng);
        agent = next_position(&agent, action, cfg);
        path.push(agent);

        let z = ste_observation(&source, &agent, cfg, &mut rng);
        let log_z = z.ln();
        let lik = |x: &[f64]| {
            likelihood_kernel(
                log_z,
                cfg.mean_concentration(x, &agent).ln(),
                cfg.sensor_noise_std,
            )
        };
        let diag = stepper.step(&mut set, &lik, &mut rng)?;

        let distance = euclidean(&set.mean(), &source);
        trace.record(distance, &diag);
        if distance <= cfg.success_radius {
            success = true;
            break;
        }
    }
    let steps = trace.len();
    trace.finish(Some(success), steps);
    Ok(SteRun {
        trace,
        source,
        path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;
    use approx::assert_abs_diff_eq;

    #[test]
    fn observation_examples() {
        let cfg = SteConfig {
            sensor_noise_std: 1e-300,
            ..SteConfig::default()
        };
        let z = ste_observation(&[3.0, 4.0], &[3.0, 4.0], &cfg, &mut trial_rng(0, 0, 0));
        assert_abs_diff_eq!(z, 2.0, epsilon = 1e-12);
        let far = ste_observation(&[0.0, 0.0], &[1e8, 0.0], &cfg, &mut trial_rng(0, 0, 0));
        assert!(far > 0.0 && far < 1e-15);

        let noiseless = SteConfig {
            sensor_noise_std: 0.0,
            ..SteConfig::default()
        };
        let a = ste_observation(
            &[1.0, 1.0],
            &[2.0, 3.0],
            &noiseless,
            &mut trial_rng(1, 0, 0),
        );
        let b = ste_observation(
            &[1.0, 1.0],
            &[2.0, 3.0],
            &noiseless,
            &mut trial_rng(2, 0, 0),
        );
        assert_eq!(a, b);
        assert_abs_diff_eq!(a, 1.0 / 5.5, epsilon = 1e-15);
    }

    #[test]
    fn likelihood_is_maximal_at_the_noiseless_reading() {
        let cfg = SteConfig::default();
        let (theta, sensor) = ([12.0, 11.0], [3.0, 2.0]);
        let c = cfg.mean_concentration(&theta, &sensor);
        // The density in log z peaks at log c; compare z·p(z) across z.
        let at_mode = ste_likelihood(&theta, c, &sensor, &cfg).unwrap() * c;
        for factor in [0.9, 0.97, 1.03, 1.1] {
            let z = c * factor;
            assert!(ste_likelihood(&theta, z, &sensor, &cfg).unwrap() * z < at_mode);
        }
        assert_eq!(
            ste_likelihood(&theta, 0.0, &sensor, &cfg),
            Err(Error::NonPositiveReading(0.0))
        );
    }

    #[test]
    fn likelihood_is_radially_symmetric() {
        let cfg = SteConfig::default();
        let sensor = [10.0, 10.0];
        let a = ste_likelihood(&[13.0, 14.0], 0.03, &sensor, &cfg).unwrap();
        let b = ste_likelihood(&[5.0, 10.0], 0.03, &sensor, &cfg).unwrap();
        let c = ste_likelihood(&[10.0, 5.0], 0.03, &sensor, &cfg).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-12 * a.max(1e-300));
        assert_abs_diff_eq!(b, c, epsilon = 1e-12 * b.max(1e-300));
    }

    #[test]
    fn kl_examples() {
        let w = [0.25; 4];
        assert_abs_diff_eq!(
            kl_divergence(&[1.0, 0.0, 0.0, 0.0], &w),
            4f64.ln(),
            epsilon = 1e-15
        );
        assert_eq!(kl_divergence(&w, &w), 0.0);
    }

    #[test]
    fn constant_likelihood_has_zero_utility() {
        // All particles on one circle around the sensor see the same reading.
        let n = 16;
        let pos: Vec<f64> = (0..n)
            .flat_map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                [10.0 + 3.0 * a.cos(), 10.0 + 3.0 * a.sin()]
            })
            .collect();
        let set = ParticleSet::uniform(pos, 2).unwrap();
        let u = expected_kl_utility(
            &set,
            &[10.0, 10.0],
            &SteConfig::default(),
            &mut trial_rng(0, 0, 0),
        );
        assert!(u.abs() < 1e-9, "{u}");
    }

    #[test]
    fn utility_is_non_negative() {
        let cfg = SteConfig::default();
        let prior = cfg.prior().unwrap();
        let pos = sample_prior(&prior, 300, &mut trial_rng(3, 0, 0)).unwrap();
        let set = ParticleSet::uniform(pos, 2).unwrap();
        for a in 0..9 {
            let p = next_position(&[5.0, 5.0], a, &cfg);
            assert!(expected_kl_utility(&set, &p, &cfg, &mut trial_rng(4, a as u64, 0)) >= 0.0);
        }
    }

    #[test]
    fn argmax_and_tie_break() {
        assert_eq!(argmax_action(&[Some(0.1), Some(0.9), Some(0.3)]), Some(1));
        assert_eq!(argmax_action(&[Some(0.0); 9]), Some(0));
        assert_eq!(argmax_action(&[None, Some(0.2), Some(0.2)]), Some(1));
        assert_eq!(argmax_action(&[None, None]), None);
    }

    #[test]
    fn corner_excludes_outward_moves() {
        let cfg = SteConfig::default();
        let pos: Vec<f64> = (0..50)
            .flat_map(|i| [i as f64 * 0.3, 19.0 - i as f64 * 0.2])
            .collect();
        let set = ParticleSet::uniform(pos, 2).unwrap();
        let (action, utilities) = select_action(&set, &[0.0, 0.0], &cfg, &mut trial_rng(0, 0, 0));
        // Only E, NE, N and stay keep the agent at or inside the corner.
        let feasible: Vec<usize> = (0..9).filter(|&a| utilities[a].is_some()).collect();
        assert_eq!(feasible, vec![0, 1, 2, 8]);
        assert!(feasible.contains(&action));
    }

    #[test]
    fn prior_region_has_the_requested_area() {
        for scope in [0.3, 0.4, 0.5, 0.6, 0.7, 0.8] {
            let cfg = SteConfig {
                priori_scope: scope,
                ..SteConfig::default()
            };
            let r = cfg.prior_region().unwrap();
            assert_abs_diff_eq!(r.volume(), scope * 400.0, epsilon = 1e-9);
            assert!(cfg.domain.contains_region(&r));
            assert!(r.contains(&cfg.agent_start_region.center()));
        }
    }

    #[test]
    fn agent_stays_in_domain_and_runs_are_deterministic() {
        let cfg = SteConfig {
            max_steps: 25,
            kl_mc_samples: 8,
            ..SteConfig::default()
        };
        let settings = FilterSettings {
            num_particles: 150,
            ..FilterSettings::default()
        };
        for variant in [Variant::Tpf, Variant::Depf] {
            let a = run_ste_trial_detailed(&cfg, variant, &settings, 5).unwrap();
            let b = run_ste_trial_detailed(&cfg, variant, &settings, 5).unwrap();
            assert_eq!(a, b);
            assert!(a.path.iter().all(|p| cfg.domain.contains(p)));
            assert_eq!(a.trace.steps_used, a.trace.len());
        }
    }
}
