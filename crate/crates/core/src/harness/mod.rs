//! Sweep orchestration: test-family norm estimates, the lattice upper sum,
//! and equivalence-band checks of operator norms against the criteria.

mod bounds;
mod discretization;
mod engine;
pub mod fixtures;
mod verify;

pub use bounds::{
    carleson_upper_bound, estimate_s_norm_lower, estimate_t_norm_lower, suff_upper_bound,
};
pub use discretization::{discretization_check, DiscretizationCheck, RefinedRatio};
pub use engine::{FamilyEstimate, Operator};
pub use verify::{
    assemble_report, default_sweep, run_sweep, shipped_measures, shipped_weights, verify_instance,
    verify_theorem, EquivalenceBand, InstanceRatios, InstanceRecord, Report, SuffConstants,
    Verdict, DEFAULT_SEED, SCHEMA_VERSION,
};

use serde::{Deserialize, Serialize};

use crate::criteria::{CriteriaPolicy, CriterionKind};
use crate::error::{Error, Result};
use crate::measures::{Atom, Density, Measure};
use crate::numerics::Point;
use crate::weights::{Weight, WeightKind};

/// Which characterization an instance checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Theorem {
    /// Berezin-type operator, `p ≤ q`, against `sup G_μ`.
    #[serde(rename = "main1-sup")]
    Main1Sup,
    /// Berezin-type operator, `p > q`, against `‖G_μ‖_{L^{pq/(p−q)}}`.
    #[serde(rename = "main1-int")]
    Main1Int,
    /// Toeplitz operator, `p ≤ q`, against `sup H_μ`.
    #[serde(rename = "main2-sup")]
    Main2Sup,
    /// Toeplitz operator, `p > q`, against `‖H_μ‖_{L^{pq/(p−q)}}`.
    #[serde(rename = "main2-int")]
    Main2Int,
    /// Carleson embedding, either regime.
    #[serde(rename = "CM")]
    Carleson,
}

impl Theorem {
    pub const ALL: [Theorem; 5] = [
        Theorem::Main1Sup,
        Theorem::Main1Int,
        Theorem::Main2Sup,
        Theorem::Main2Int,
        Theorem::Carleson,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Theorem::Main1Sup => "main1-sup",
            Theorem::Main1Int => "main1-int",
            Theorem::Main2Sup => "main2-sup",
            Theorem::Main2Int => "main2-int",
            Theorem::Carleson => "CM",
        }
    }

    pub fn parse(s: &str) -> Option<Theorem> {
        Theorem::ALL.into_iter().find(|t| t.label() == s)
    }

    pub fn criterion_kind(self) -> CriterionKind {
        match self {
            Theorem::Main1Sup | Theorem::Main1Int => CriterionKind::G,
            Theorem::Main2Sup | Theorem::Main2Int => CriterionKind::H,
            Theorem::Carleson => CriterionKind::CM,
        }
    }

    /// Whether the theorem applies to the exponent pair.
    pub fn regime_matches(self, p: f64, q: f64) -> bool {
        match self {
            Theorem::Main1Sup | Theorem::Main2Sup => p <= q,
            Theorem::Main1Int | Theorem::Main2Int => p > q,
            Theorem::Carleson => true,
        }
    }

    /// `t` and `β` are parameters of the Berezin-type operator only.
    pub fn uses_berezin_params(self) -> bool {
        matches!(self, Theorem::Main1Sup | Theorem::Main1Int)
    }
}

/// Measure families as written in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureKind {
    Zero,
    Dirac {
        location: Vec<f64>,
        mass: f64,
    },
    Atoms {
        locations: Vec<Vec<f64>>,
        masses: Vec<f64>,
    },
    /// Atoms uniform in `B_radius(0)`, drawn from the instance seed.
    RandomCloud {
        count: usize,
        radius: f64,
        mass_low: f64,
        mass_high: f64,
    },
    /// `m_ν = e^{−σ|ν|²}` on `ℤ²ⁿ ∩ B̄_cutoff`.
    LatticeGaussian {
        sigma: f64,
        cutoff: f64,
    },
    /// `m_ν = (1+|ν|)^{−τ}` on `ℤ²ⁿ ∩ B̄_cutoff`.
    LatticePower {
        tau: f64,
        cutoff: f64,
    },
    Lebesgue,
    /// `c·e^{−σ|z|²} dv`.
    GaussianDensity {
        c: f64,
        sigma: f64,
    },
    /// `c·χ_{B_radius(0)} dv`.
    BallDensity {
        c: f64,
        radius: f64,
    },
}

impl MeasureKind {
    pub fn label(&self) -> &'static str {
        match self {
            MeasureKind::Zero => "zero",
            MeasureKind::Dirac { .. } => "dirac",
            MeasureKind::Atoms { .. } => "atoms",
            MeasureKind::RandomCloud { .. } => "random-cloud",
            MeasureKind::LatticeGaussian { .. } => "lattice-gaussian",
            MeasureKind::LatticePower { .. } => "lattice-power",
            MeasureKind::Lebesgue => "lebesgue",
            MeasureKind::GaussianDensity { .. } => "gaussian-density",
            MeasureKind::BallDensity { .. } => "ball-density",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    #[serde(flatten)]
    pub kind: MeasureKind,
    /// Overall factor λ applied to the measure.
    pub scale: f64,
}

impl MeasureSpec {
    pub fn new(kind: MeasureKind) -> Self {
        MeasureSpec { kind, scale: 1.0 }
    }

    pub fn build(&self, dim: usize, seed: u64) -> Result<Measure> {
        let point = |c: &[f64]| -> Result<Point> {
            let p = Point::from_coords(c)?;
            p.check_dim(dim)?;
            Ok(p)
        };
        let mu = match &self.kind {
            MeasureKind::Zero => Measure::zero(dim),
            MeasureKind::Dirac { location, mass } => Measure::dirac(point(location)?, *mass)?,
            MeasureKind::Atoms { locations, masses } => {
                if locations.len() != masses.len() {
                    return Err(Error::invalid(format!(
                        "{} atom locations but {} masses",
                        locations.len(),
                        masses.len()
                    )));
                }
                let atoms = locations
                    .iter()
                    .zip(masses)
                    .map(|(l, m)| {
                        Ok(Atom {
                            location: point(l)?,
                            mass: *m,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Measure::new(dim, atoms, None)?
            }
            MeasureKind::RandomCloud {
                count,
                radius,
                mass_low,
                mass_high,
            } => Measure::random_cloud(dim, *count, *radius, (*mass_low, *mass_high), seed)?,
            MeasureKind::LatticeGaussian { sigma, cutoff } => {
                Measure::lattice_gaussian(dim, *sigma, *cutoff)?
            }
            MeasureKind::LatticePower { tau, cutoff } => {
                Measure::lattice_power(dim, *tau, *cutoff)?
            }
            MeasureKind::Lebesgue => Measure::lebesgue(dim),
            MeasureKind::GaussianDensity { c, sigma } => Measure::with_density(
                dim,
                Density::Gaussian {
                    c: *c,
                    sigma: *sigma,
                },
            )?,
            MeasureKind::BallDensity { c, radius } => Measure::with_density(
                dim,
                Density::BallIndicator {
                    c: *c,
                    radius: *radius,
                },
            )?,
        };
        if self.scale == 1.0 {
            Ok(mu)
        } else {
            mu.scaled(self.scale)
        }
    }

    /// Whether the criterion is known to vanish at infinity, for the family
    /// the spec stands for. Truncated lattices reaching past the outermost
    /// probed shell are judged by their untruncated law.
    pub fn expected_vanishing(&self, outermost_shell: f64) -> Option<bool> {
        if self.scale == 0.0 {
            return Some(true);
        }
        match &self.kind {
            MeasureKind::Lebesgue => Some(false),
            MeasureKind::LatticePower { tau, cutoff } if *cutoff > outermost_shell + 1.0 => {
                Some(*tau > 0.0)
            }
            MeasureKind::LatticeGaussian { sigma, cutoff } if *cutoff > outermost_shell + 1.0 => {
                Some(*sigma > 0.0)
            }
            _ => Some(true),
        }
    }
}

/// Exponents and Gaussian parameters; `t` and `β` only for the Berezin-type operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub p: f64,
    pub q: f64,
    pub t: Option<f64>,
    pub alpha: f64,
    pub beta: Option<f64>,
}

/// Grids and criterion-evaluation knobs of one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPolicy {
    /// Step of the tensor grid carrying the norm integrals and density samples.
    pub step: f64,
    pub radius: f64,
    pub fine_step: f64,
    pub r_sup: f64,
    pub integral_step: f64,
    pub integral_radius: f64,
    pub shell_radii: Vec<f64>,
    pub decay_step: f64,
    pub eps_rel: f64,
}

impl GridPolicy {
    pub fn for_dim(dim: usize) -> Self {
        let c = CriteriaPolicy::default();
        let (step, radius) = if dim == 1 { (0.25, 12.0) } else { (0.5, 6.0) };
        GridPolicy {
            step,
            radius,
            fine_step: if dim == 1 { c.fine_step } else { 0.5 },
            r_sup: if dim == 1 { c.r_sup } else { 4.0 },
            integral_step: if dim == 1 { c.integral_step } else { 0.5 },
            integral_radius: c.integral_radius,
            shell_radii: c.shell_radii,
            decay_step: if dim == 1 { c.decay_step } else { 0.5 },
            eps_rel: c.eps_rel,
        }
    }

    pub fn criteria_policy(&self) -> CriteriaPolicy {
        CriteriaPolicy {
            r_sup: self.r_sup,
            fine_step: self.fine_step,
            shell_radii: self.shell_radii.clone(),
            decay_step: self.decay_step,
            eps_rel: self.eps_rel,
            integral_step: self.integral_step,
            integral_radius: self.integral_radius,
        }
    }
}

/// Sizes of the test family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    /// Kernel centers `ν ∈ ℤ²ⁿ` with every `|ν_i| ≤ kernel_box`.
    pub kernel_box: u32,
    /// Rademacher combinations use the centers with `|ν| ≤ rademacher_radius`.
    pub rademacher_radius: f64,
    pub rademacher_draws: usize,
}

impl FamilySpec {
    pub fn for_dim(dim: usize) -> Self {
        FamilySpec {
            kernel_box: if dim == 1 { 2 } else { 1 },
            rademacher_radius: if dim == 1 { 2.0 } else { 1.0 },
            rademacher_draws: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub id: String,
    pub theorem: Theorem,
    pub dim: usize,
    pub measure: MeasureSpec,
    pub weight: WeightKind,
    pub params: ParamSpec,
    pub grid: GridPolicy,
    pub family: FamilySpec,
    pub seed: u64,
}

impl InstanceConfig {
    pub fn build_measure(&self) -> Result<Measure> {
        self.measure.build(self.dim, self.seed)
    }

    pub fn build_weight(&self) -> Result<Weight> {
        Weight::new(self.weight.clone(), self.dim)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepConfig {
    pub instances: Vec<InstanceConfig>,
}
