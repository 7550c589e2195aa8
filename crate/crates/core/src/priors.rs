//! Sampling from, and support membership for, the prior families used to
//! initialise the particle sets.
//!
//! Every sample is drawn by proposing a candidate and keeping it only if
//! [`support_contains`] accepts it, so sampling and membership can never
//! disagree, rounding included.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::Region;

/// Consecutive rejected proposals tolerated before sampling gives up.
pub const REJECTION_BUDGET: usize = 10_000;

/// Slack on the simplex constraint of the Dirichlet embedding.
const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PriorFamily {
    UniformBox,
    /// Independent normals per axis, truncated to the region.
    TruncatedGaussian {
        mean: Vec<f64>,
        variance: Vec<f64>,
    },
    /// Independent `Beta(a_k, b_k)` per axis, mapped onto the region.
    BetaBox {
        a: Vec<f64>,
        b: Vec<f64>,
    },
    /// The first `n` coordinates of a `Dirichlet(alpha)` draw (`alpha` has
    /// `n + 1` entries), mapped onto the region.
    DirichletBox {
        alpha: Vec<f64>,
    },
    /// Filled star polygon whose vertices alternate between the outer and
    /// inner radius, first outer vertex pointing along +y.
    Star {
        center: [f64; 2],
        outer_radius: f64,
        inner_radius: f64,
        points: usize,
    },
    /// Annulus restricted to the polar angles `[0, 2π·fraction]`.
    RingSector {
        center: [f64; 2],
        inner_radius: f64,
        outer_radius: f64,
        fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub region: Region,
    #[serde(flatten)]
    pub family: PriorFamily,
}

impl PriorSpec {
    pub fn new(region: Region, family: PriorFamily) -> Result<Self> {
        let spec = Self { region, family };
        spec.validate()?;
        Ok(spec)
    }

    pub fn uniform(region: Region) -> Self {
        Self {
            region,
            family: PriorFamily::UniformBox,
        }
    }

    pub fn dim(&self) -> usize {
        self.region.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        let check_len = |field: &str, len: usize, want: usize| {
            if len == want {
                Ok(())
            } else {
                Err(Error::invalid(
                    field,
                    format!("expected {want} entries, got {len}"),
                ))
            }
        };
        let positive = |field: &str, vals: &[f64]| {
            if vals.iter().all(|v| v.is_finite() && *v > 0.0) {
                Ok(())
            } else {
                Err(Error::invalid(field, "entries must be finite and positive"))
            }
        };
        match &self.family {
            PriorFamily::UniformBox => Ok(()),
            PriorFamily::TruncatedGaussian { mean, variance } => {
                check_len("mean", mean.len(), n)?;
                check_len("variance", variance.len(), n)?;
                positive("variance", variance)
            }
            PriorFamily::BetaBox { a, b } => {
                check_len("a", a.len(), n)?;
                check_len("b", b.len(), n)?;
                positive("a", a)?;
                positive("b", b)
            }
            PriorFamily::DirichletBox { alpha } => {
                check_len("alpha", alpha.len(), n + 1)?;
                positive("alpha", alpha)
            }
            PriorFamily::Star {
                outer_radius,
                inner_radius,
                points,
                ..
            } => {
                check_len("region", n, 2)?;
                if !(*inner_radius > 0.0 && inner_radius <= outer_radius) {
                    return Err(Error::invalid(
                        "star",
                        "need 0 < inner_radius <= outer_radius",
                    ));
                }
                if *points < 2 {
                    return Err(Error::invalid("star", "need at least two points"));
                }
                Ok(())
            }
            PriorFamily::RingSector {
                inner_radius,
                outer_radius,
                fraction,
                ..
            } => {
                check_len("region", n, 2)?;
                if !(*inner_radius >= 0.0 && inner_radius < outer_radius) {
                    return Err(Error::invalid(
                        "ring",
                        "need 0 <= inner_radius < outer_radius",
                    ));
                }
                if !(*fraction > 0.0 && *fraction <= 1.0) {
                    return Err(Error::invalid("ring", "fraction must lie in (0, 1]"));
                }
                Ok(())
            }
        }
    }
}

/// Whether `point` lies in the support of the prior.
pub fn support_contains(spec: &PriorSpec, point: &[f64]) -> Result<bool> {
    if point.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            actual: point.len(),
        });
    }
    if !spec.region.contains(point) {
        return Ok(false);
    }
    Ok(match &spec.family {
        PriorFamily::UniformBox
        | PriorFamily::TruncatedGaussian { .. }
        | PriorFamily::BetaBox { .. } => true,
        PriorFamily::DirichletBox { .. } => {
            spec.region.to_unit(point).iter().sum::<f64>() <= 1.0 + SIMPLEX_TOL
        }
        PriorFamily::Star {
            center,
            outer_radius,
            inner_radius,
            points,
        } => {
            let poly = star_vertices(*center, *outer_radius, *inner_radius, *points);
            point_in_polygon(&poly, [point[0], point[1]])
        }
        PriorFamily::RingSector {
            center,
            inner_radius,
            outer_radius,
            fraction,
        } => {
            let dx = point[0] - center[0];
            let dy = point[1] - center[1];
            let r = dx.hypot(dy);
            if r < *inner_radius || r > *outer_radius {
                false
            } else if *fraction >= 1.0 {
                true
            } else {
                polar_angle(dx, dy) <= TAU * fraction
            }
        }
    })
}

/// Draws `count` points (row-major) from the prior.
pub fn sample_prior<R: Rng + ?Sized>(
    spec: &PriorSpec,
    count: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.dim();
    let mut out = Vec::with_capacity(count * n);
    let mut candidate = vec![0.0; n];
    let star = match &spec.family {
        PriorFamily::Star {
            center,
            outer_radius,
            inner_radius,
            points,
        } => Some(star_vertices(
            *center,
            *outer_radius,
            *inner_radius,
            *points,
        )),
        _ => None,
    };
    for _ in 0..count {
        let mut misses = 0;
        loop {
            propose(spec, rng, &mut candidate)?;
            let inside = match &star {
                // Skip rebuilding the polygon for every proposal.
                Some(poly) => {
                    spec.region.contains(&candidate)
                        && point_in_polygon(poly, [candidate[0], candidate[1]])
                }
                None => support_contains(spec, &candidate)?,
            };
            if inside {
                out.extend_from_slice(&candidate);
                break;
            }
            misses += 1;
            if misses >= REJECTION_BUDGET {
                return Err(Error::RejectionBudgetExceeded { attempts: misses });
            }
        }
    }
    Ok(out)
}

fn propose<R: Rng + ?Sized>(spec: &PriorSpec, rng: &mut R, out: &mut [f64]) -> Result<()> {
    let region = &spec.region;
    match &spec.family {
        PriorFamily::UniformBox => region.sample_into(rng, out),
        PriorFamily::TruncatedGaussian { mean, variance } => {
            for (k, v) in out.iter_mut().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                *v = mean[k] + variance[k].sqrt() * z;
            }
        }
        PriorFamily::BetaBox { a, b } => {
            for (k, v) in out.iter_mut().enumerate() {
                let beta =
                    Beta::new(a[k], b[k]).map_err(|e| Error::invalid("beta", e.to_string()))?;
                *v = region.lo[k] + beta.sample(rng) * region.side(k);
            }
        }
        PriorFamily::DirichletBox { alpha } => {
            let mut total = 0.0;
            let mut draws = Vec::with_capacity(alpha.len());
            for a in alpha {
                let g = Gamma::new(*a, 1.0).map_err(|e| Error::invalid("alpha", e.to_string()))?;
                let x: f64 = g.sample(rng);
                total += x;
                draws.push(x);
            }
            for (k, v) in out.iter_mut().enumerate() {
                *v = region.lo[k] + draws[k] / total * region.side(k);
            }
        }
        PriorFamily::Star {
            center,
            outer_radius,
            ..
        } => {
            for (k, v) in out.iter_mut().enumerate() {
                *v = center[k] + (2.0 * rng.random::<f64>() - 1.0) * outer_radius;
            }
        }
        PriorFamily::RingSector {
            center,
            inner_radius,
            outer_radius,
            fraction,
        } => {
            let (r0, r1) = (inner_radius * inner_radius, outer_radius * outer_radius);
            let r = (r0 + rng.random::<f64>() * (r1 - r0)).sqrt();
            let theta = rng.random::<f64>() * TAU * fraction;
            out[0] = center[0] + r * theta.cos();
            out[1] = center[1] + r * theta.sin();
        }
    }
    Ok(())
}

/// Angle of `(dx, dy)` in `[0, 2π)`.
fn polar_angle(dx: f64, dy: f64) -> f64 {
    let a = dy.atan2(dx);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

fn star_vertices(center: [f64; 2], outer: f64, inner: f64, points: usize) -> Vec<[f64; 2]> {
    (0..2 * points)
        .map(|k| {
            let r = if k % 2 == 0 { outer } else { inner };
            let a = PI / 2.0 + k as f64 * PI / points as f64;
            [center[0] + r * a.cos(), center[1] + r * a.sin()]
        })
        .collect()
}

/// Even-odd ray casting.
fn point_in_polygon(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// The eight named prior shapes of the source-search experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriorKind {
    Uniform,
    Beta,
    Gaussian,
    Dirichlet,
    Star,
    QuarterRing,
    HalfRing,
    ThreeQuarterRing,
}

impl PriorKind {
    pub const ALL: [PriorKind; 8] = [
        PriorKind::Uniform,
        PriorKind::Beta,
        PriorKind::Gaussian,
        PriorKind::Dirichlet,
        PriorKind::Star,
        PriorKind::QuarterRing,
        PriorKind::HalfRing,
        PriorKind::ThreeQuarterRing,
    ];

    /// Table label, e.g. `1/4 Ring`.
    pub fn label(self) -> &'static str {
        match self {
            PriorKind::Uniform => "Uniform",
            PriorKind::Beta => "Beta",
            PriorKind::Gaussian => "Gaussian",
            PriorKind::Dirichlet => "Dirichlet",
            PriorKind::Star => "Star",
            PriorKind::QuarterRing => "1/4 Ring",
            PriorKind::HalfRing => "1/2 Ring",
            PriorKind::ThreeQuarterRing => "3/4 Ring",
        }
    }

    /// Command-line name, e.g. `ring-1/4`.
    pub fn name(self) -> &'static str {
        match self {
            PriorKind::Uniform => "uniform",
            PriorKind::Beta => "beta",
            PriorKind::Gaussian => "gaussian",
            PriorKind::Dirichlet => "dirichlet",
            PriorKind::Star => "star",
            PriorKind::QuarterRing => "ring-1/4",
            PriorKind::HalfRing => "ring-1/2",
            PriorKind::ThreeQuarterRing => "ring-3/4",
        }
    }

    /// Builds the concrete prior inside `region`.
    ///
    /// Gaussian: centred, per-axis std = side/4. Beta: `Beta(2, 2)` per axis.
    /// Dirichlet: `alpha = 2` everywhere. Star: five points, outer radius =
    /// half the shorter side, inner = 0.4 × outer. Rings: outer radius =
    /// half the shorter side, inner = half the outer.
    pub fn build(self, region: &Region) -> Result<PriorSpec> {
        let n = region.dim();
        let center = region.center();
        let half_min = (0..n).map(|k| region.side(k)).fold(f64::INFINITY, f64::min) / 2.0;
        let c2 = || -> Result<[f64; 2]> {
            if n == 2 {
                Ok([center[0], center[1]])
            } else {
                Err(Error::invalid(
                    "prior",
                    format!("{} needs a 2D region", self.name()),
                ))
            }
        };
        let ring = |fraction: f64| -> Result<PriorFamily> {
            Ok(PriorFamily::RingSector {
                center: c2()?,
                inner_radius: half_min / 2.0,
                outer_radius: half_min,
                fraction,
            })
        };
        let family = match self {
            PriorKind::Uniform => PriorFamily::UniformBox,
            PriorKind::Beta => PriorFamily::BetaBox {
                a: vec![2.0; n],
                b: vec![2.0; n],
            },
            PriorKind::Gaussian => PriorFamily::TruncatedGaussian {
                mean: center.clone(),
                variance: (0..n).map(|k| (region.side(k) / 4.0).powi(2)).collect(),
            },
            PriorKind::Dirichlet => PriorFamily::DirichletBox {
                alpha: vec![2.0; n + 1],
            },
            PriorKind::Star => PriorFamily::Star {
                center: c2()?,
                outer_radius: half_min,
                inner_radius: 0.4 * half_min,
                points: 5,
            },
            PriorKind::QuarterRing => ring(0.25)?,
            PriorKind::HalfRing => ring(0.5)?,
            PriorKind::ThreeQuarterRing => ring(0.75)?,
        };
        PriorSpec::new(region.clone(), family)
    }
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PriorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        PriorKind::ALL
            .into_iter()
            .find(|k| {
                k.name() == key
                    || k.label().to_ascii_lowercase().replace(' ', "-") == key
                    || match k {
                        PriorKind::QuarterRing => key == "quarter-ring",
                        PriorKind::HalfRing => key == "half-ring",
                        PriorKind::ThreeQuarterRing => key == "three-quarter-ring",
                        _ => false,
                    }
            })
            .ok_or_else(|| Error::invalid("priors", format!("unknown prior '{s}'")))
    }
}
