//! Sweep configuration: defaults, a TOML config file, and overrides.
//!
//! Resolution order is defaults, then the config file, then command-line
//! flags; later layers win. Every key is optional:
//!
//! ```toml
//! dims = [1, 2]
//! particles = [400, 600]
//! exploration_ratios = [0.3]
//! priors = ["gaussian", "ring-1/2"]
//! scopes = [0.3]
//! trials = 10
//! iterations = 50
//! max_steps = 150
//! variant = "both"        # tpf | depf | both
//! seed = 7
//! format = "csv"          # csv | json
//! jobs = 4
//! avg_step_mode = "all"   # all | success-only
//! beta = 1e-3
//! epsilon = 1e-3
//! lambda = 1e-6
//! ess_threshold = 0.5     # fraction of N
//! p_norm = 2.0
//! lik_scale = 1.0
//! sensor_noise_std = 0.05
//! kl_mc_samples = 32
//! success_radius = 0.5
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::AvgStepMode;
use crate::priors::PriorKind;
use crate::scenarios::Variant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    /// p-norm localization.
    Localization,
    /// Source term estimation.
    SourceSearch,
}

impl Phase {
    pub fn number(self) -> u8 {
        match self {
            Phase::Localization => 1,
            Phase::SourceSearch => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::invalid(
                "format",
                format!("unknown format '{other}'"),
            )),
        }
    }
}

/// `tpf`, `depf` or `both`.
pub fn parse_variants(s: &str) -> Result<Vec<Variant>> {
    match s.trim().to_ascii_lowercase().as_str() {
        "both" => Ok(vec![Variant::Tpf, Variant::Depf]),
        other => Ok(vec![other.parse()?]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub phase: Phase,
    pub dims: Vec<usize>,
    pub particles: Vec<usize>,
    pub exploration_ratios: Vec<f64>,
    pub priors: Vec<PriorKind>,
    pub scopes: Vec<f64>,
    pub trials: usize,
    pub iterations: usize,
    pub max_steps: usize,
    pub seed: u64,
    pub variants: Vec<Variant>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub avg_step_mode: AvgStepMode,
    pub beta: f64,
    pub epsilon: f64,
    pub lambda: f64,
    pub ess_threshold: f64,
    pub p_norm: f64,
    pub lik_scale: f64,
    pub sensor_noise_std: f64,
    pub kl_mc_samples: usize,
    pub success_radius: f64,
}

impl SweepConfig {
    /// Defaults reproduce one table cell per phase: 1D/400/0.3 for
    /// localization, Gaussian/0.3/0.3 for source search.
    pub fn new(phase: Phase) -> Self {
        Self {
            phase,
            dims: vec![1],
            particles: vec![match phase {
                Phase::Localization => 400,
                Phase::SourceSearch => 500,
            }],
            exploration_ratios: vec![0.3],
            priors: vec![PriorKind::Gaussian],
            scopes: vec![0.3],
            trials: 10,
            iterations: 50,
            max_steps: 150,
            seed: 0,
            variants: vec![Variant::Tpf, Variant::Depf],
            out: None,
            format: OutputFormat::Csv,
            jobs: 0,
            avg_step_mode: AvgStepMode::All,
            beta: 1e-3,
            epsilon: 1e-3,
            lambda: 1e-6,
            ess_threshold: 0.5,
            p_norm: 2.0,
            lik_scale: 1.0,
            sensor_noise_std: 0.05,
            kl_mc_samples: 32,
            success_radius: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let non_empty = |field: &str, len: usize| {
            if len == 0 {
                Err(Error::invalid(field, "list must not be empty"))
            } else {
                Ok(())
            }
        };
        non_empty("particles", self.particles.len())?;
        non_empty("exploration-ratios", self.exploration_ratios.len())?;
        non_empty("variant", self.variants.len())?;
        match self.phase {
            Phase::Localization => {
                non_empty("dims", self.dims.len())?;
                if let Some(d) = self.dims.iter().find(|d| !(1..=7).contains(*d)) {
                    return Err(Error::invalid("dims", format!("{d} outside 1..=7")));
                }
                if self.iterations == 0 {
                    return Err(Error::invalid("iterations", "must be at least 1"));
                }
            }
            Phase::SourceSearch => {
                non_empty("priors", self.priors.len())?;
                non_empty("scopes", self.scopes.len())?;
                if self.particles.len() != 1 {
                    return Err(Error::invalid(
                        "particles",
                        "source search takes exactly one particle count",
                    ));
                }
                if let Some(s) = self.scopes.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
                    return Err(Error::invalid("scopes", format!("{s} outside (0, 1]")));
                }
                if self.max_steps == 0 {
                    return Err(Error::invalid("max_steps", "must be at least 1"));
                }
            }
        }
        if let Some(n) = self.particles.iter().find(|n| **n == 0) {
            return Err(Error::invalid(
                "particles",
                format!("{n} is not a valid count"),
            ));
        }
        if let Some(r) = self
            .exploration_ratios
            .iter()
            .find(|r| !(0.0..=1.0).contains(*r))
        {
            return Err(Error::invalid(
                "exploration-ratios",
                format!("{r} outside [0, 1]"),
            ));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        Ok(())
    }
}

/// Optional values layered over a [`SweepConfig`]. Doubles as the schema of
/// the config file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepOverrides {
    pub dims: Option<Vec<usize>>,
    pub particles: Option<Vec<usize>>,
    pub exploration_ratios: Option<Vec<f64>>,
    pub priors: Option<Vec<String>>,
    pub scopes: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub iterations: Option<usize>,
    pub max_steps: Option<usize>,
    pub seed: Option<u64>,
    pub variant: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub jobs: Option<usize>,
    pub avg_step_mode: Option<String>,
    pub beta: Option<f64>,
    pub epsilon: Option<f64>,
    pub lambda: Option<f64>,
    pub ess_threshold: Option<f64>,
    pub p_norm: Option<f64>,
    pub lik_scale: Option<f64>,
    pub sensor_noise_std: Option<f64>,
    pub kl_mc_samples: Option<usize>,
    pub success_radius: Option<f64>,
}

impl SweepOverrides {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid("config", e.message().to_string()))
    }

    pub fn apply(&self, cfg: &mut SweepConfig) -> Result<()> {
        macro_rules! take {
            ($($field:ident),*) => {
                $(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*
            };
        }
        take!(
            dims,
            particles,
            exploration_ratios,
            scopes,
            trials,
            iterations,
            max_steps,
            seed,
            jobs,
            beta,
            epsilon,
            lambda,
            ess_threshold,
            p_norm,
            lik_scale,
            sensor_noise_std,
            kl_mc_samples,
            success_radius
        );
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Some(p) = &self.priors {
            cfg.priors = p.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if let Some(v) = &self.variant {
            cfg.variants = parse_variants(v)?;
        }
        if let Some(f) = &self.format {
            cfg.format = f.parse()?;
        }
        if let Some(m) = &self.avg_step_mode {
            cfg.avg_step_mode = m.parse()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let file = SweepOverrides::from_toml_str(
            r#"
            dims = [1, 2]
            particles = [50, 200]
            variant = "depf"
            seed = 3
            priors = ["star", "1/4 Ring"]
            "#,
        )
        .unwrap();
        let flags = SweepOverrides {
            seed: Some(9),
            format: Some("json".into()),
            ..Default::default()
        };
        let mut cfg = SweepConfig::new(Phase::Localization);
        file.apply(&mut cfg).unwrap();
        flags.apply(&mut cfg).unwrap();
        assert_eq!(cfg.dims, vec![1, 2]);
        assert_eq!(cfg.particles, vec![50, 200]);
        assert_eq!(cfg.variants, vec![Variant::Depf]);
        assert_eq!(cfg.priors, vec![PriorKind::Star, PriorKind::QuarterRing]);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.format, OutputFormat::Json);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_keys_and_values_are_rejected() {
        assert!(SweepOverrides::from_toml_str("speed = 3").is_err());
        let bad = SweepOverrides {
            variant: Some("ukf".into()),
            ..Default::default()
        };
        assert!(bad
            .apply(&mut SweepConfig::new(Phase::Localization))
            .is_err());
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = SweepConfig::new(Phase::Localization);
        cfg.dims = vec![9];
        match cfg.validate() {
            Err(Error::InvalidConfig { field, .. }) => assert_eq!(field, "dims"),
            other => panic!("{other:?}"),
        }
        let mut cfg = SweepConfig::new(Phase::SourceSearch);
        cfg.particles = vec![100, 200];
        assert!(cfg.validate().is_err());
    }
}
