//! Sequential Monte Carlo estimation for targets that lie outside the
//! support of the initial prior.
//!
//! Two filters share one particle representation:
//!
//! * a bootstrap particle filter ([`filter::tpf_step`]), whose particle
//!   support can never leave the prior support when the transition is static;
//! * a diffusion-enhanced filter ([`depf::depf_step`]) that injects
//!   exploratory particles from an extended bounding box, pulls the weights
//!   toward uniform with an entropy term, and rejuvenates particles with a
//!   covariance-shaped Gaussian kernel validated by a Metropolis-Hastings test.
//!
//! The [`scenarios`] module holds the two experiment worlds (p-norm
//! localization and mobile-sensor source term estimation), [`metrics`]
//! aggregates trials, and [`harness`] runs parameter sweeps and writes
//! CSV/JSON tables.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod depf;
pub mod error;
pub mod filter;
pub mod harness;
pub mod metrics;
pub mod particles;
pub mod priors;
pub mod region;
pub mod rng;
pub mod scenarios;

pub use depf::{depf_step, optimal_bandwidth, BandwidthInfo, DepfParams};
pub use error::{Error, Result};
pub use filter::{tpf_step, Likelihood, StepDiagnostics, TransitionSpec};
pub use metrics::{aggregate_trials, AvgStepMode, SummaryStats, TrialTrace};
pub use particles::{
    effective_sample_size, normalize_weights, shannon_entropy, weighted_mean, ParticleSet,
    DEFAULT_EPS_LOG,
};
pub use priors::{PriorFamily, PriorSpec};
pub use region::Region;
pub use rng::{derive_seed, trial_rng, TrialRng};
pub use scenarios::Variant;
