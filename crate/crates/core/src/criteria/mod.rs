//! Criterion functionals `G_μ`, `H_μ` and the Carleson ratio, their lattice
//! surrogates over `Q_r(ν)`, decay profiles, and the product embedding ratio.

mod product;

pub use product::product_carleson_check;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::numerics::{lattice_points, Ball, Cube, Point, QuadratureGrid};
use crate::weights::{Weight, MEMBERSHIP_SENTINEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CriterionKind {
    /// Berezin-type: `μ(B)^{1/t} / w(B)^{1/p − 1/q}`.
    G,
    /// Toeplitz-type: `μ(B) / w(B)^{1/p − 1/q}`.
    H,
    /// Carleson embedding: `μ(B)/w(B)^{q/p}` (p ≤ q) or `μ(B)/w(B)` (p > q).
    CM,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionSpec {
    pub kind: CriterionKind,
    pub p: f64,
    pub q: f64,
    pub t: Option<f64>,
    /// Ball radius and lattice cube side.
    pub r: f64,
    pub weight: Weight,
    pub measure: Measure,
}

impl CriterionSpec {
    pub fn new(
        kind: CriterionKind,
        p: f64,
        q: f64,
        t: Option<f64>,
        weight: Weight,
        measure: Measure,
    ) -> Result<Self> {
        for (name, v) in [("p", p), ("q", q)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "criterion exponent {name} must be positive, got {v}"
                )));
            }
        }
        match (kind, t) {
            (CriterionKind::G, Some(t)) if t > 0.0 && t.is_finite() => {}
            (CriterionKind::G, _) => return Err(Error::invalid("criterion G needs a positive t")),
            (_, Some(_)) => return Err(Error::invalid("t is only meaningful for criterion G")),
            _ => {}
        }
        if weight.dim() != measure.dim() {
            return Err(Error::invalid(
                "weight and measure live in different dimensions",
            ));
        }
        Ok(CriterionSpec {
            kind,
            p,
            q,
            t,
            r: 1.0,
            weight,
            measure,
        })
    }

    pub fn with_radius(mut self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!(
                "criterion radius must be positive, got {r}"
            )));
        }
        self.r = r;
        Ok(self)
    }

    pub fn with_measure(&self, measure: Measure) -> Self {
        CriterionSpec {
            measure,
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.weight.dim()
    }

    /// `(γ, η)` with criterion `μ(E)^γ / w(E)^η`.
    pub fn exponents(&self) -> (f64, f64) {
        let gap = 1.0 / self.p - 1.0 / self.q;
        match self.kind {
            CriterionKind::G => (1.0 / self.t.unwrap_or(1.0), gap),
            CriterionKind::H => (1.0, gap),
            CriterionKind::CM if self.p <= self.q => (1.0, self.q / self.p),
            CriterionKind::CM => (1.0, 1.0),
        }
    }

    /// Exponent `s` of the integral criterion, present only for `p > q`:
    /// `pq/(p−q)` against `dv` for G, H and `p/(p−q)` against `w dv` for CM.
    pub fn integral_exponent(&self) -> Option<f64> {
        if self.p <= self.q {
            return None;
        }
        Some(match self.kind {
            CriterionKind::CM => self.p / (self.p - self.q),
            _ => self.p * self.q / (self.p - self.q),
        })
    }

    fn ratio(&self, mu_mass: f64, w_mass: f64, at: &Point) -> Result<f64> {
        // weights are validated positive, so a zero or infinite mass is under/overflow
        if !(w_mass > 0.0 && w_mass.is_finite()) {
            return Err(Error::domain(*at, w_mass, "weight mass of a ball or cube"));
        }
        let (g, e) = self.exponents();
        if mu_mass == 0.0 {
            return Ok(0.0);
        }
        Ok(mu_mass.powf(g) / w_mass.powf(e))
    }

    /// The lattice surrogate `μ(Q_r(ν))^γ / w(Q_r(ν))^η`.
    pub fn lattice_value(&self, nu: &Point) -> Result<f64> {
        let q = Cube::new(*nu, self.r)?;
        self.ratio(
            self.measure.cube_mass(&q)?,
            self.weight.mass_on_cube(&q)?,
            nu,
        )
    }
}

/// `G_μ(z)`, `H_μ(z)` or the Carleson ratio at `z`, over the ball `B_r(z)`.
pub fn criterion_value(spec: &CriterionSpec, z: &Point) -> Result<f64> {
    let b = Ball::new(*z, spec.r)?;
    spec.ratio(
        spec.measure.ball_mass(&b)?,
        spec.weight.mass_on_ball(&b)?,
        z,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupCriterion {
    pub fine_sup: f64,
    pub fine_argmax: Point,
    pub lattice_sup: f64,
    pub lattice_argmax: Point,
}

fn argmax(points: &[Point], vals: &[f64]) -> (f64, Point) {
    let mut best = (f64::NEG_INFINITY, points[0]);
    for (p, v) in points.iter().zip(vals) {
        if *v > best.0 {
            best = (*v, *p);
        }
    }
    best
}

fn values_at(points: &[Point], f: impl Fn(&Point) -> Result<f64> + Sync) -> Result<Vec<f64>> {
    points.par_iter().map(&f).collect()
}

/// Fine-grid supremum of the criterion over `|z| ≤ r_sup`, alongside the
/// lattice supremum over `ν ∈ rℤ²ⁿ`, `|ν| ≤ r_sup`.
pub fn sup_criterion(spec: &CriterionSpec, r_sup: f64, fine_step: f64) -> Result<SupCriterion> {
    let fine = lattice_points(fine_step, r_sup, spec.dim())?;
    let lattice = lattice_points(spec.r, r_sup, spec.dim())?;
    let fv = values_at(&fine, |z| criterion_value(spec, z))?;
    let lv = values_at(&lattice, |nu| spec.lattice_value(nu))?;
    let (fine_sup, fine_argmax) = argmax(&fine, &fv);
    let (lattice_sup, lattice_argmax) = argmax(&lattice, &lv);
    Ok(SupCriterion {
        fine_sup,
        fine_argmax,
        lattice_sup,
        lattice_argmax,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralCriterion {
    /// `+∞` when the truncated integral keeps growing.
    pub direct: f64,
    pub lattice: f64,
    pub integrable: bool,
}

/// Share of a truncated integral above which it is declared divergent:
/// the part coming from `0.75R < |z| ≤ R`.
pub const DIVERGENCE_SHARE: f64 = 0.05;

/// `‖criterion‖_{L^s}` directly on `grid` and through the lattice sum over
/// `rℤ²ⁿ ∩ B̄_R`; needs `p > q`.
pub fn integral_criterion(
    spec: &CriterionSpec,
    grid: &QuadratureGrid,
) -> Result<IntegralCriterion> {
    let s = spec
        .integral_exponent()
        .ok_or_else(|| Error::invalid("the integral criterion needs p > q"))?;
    let carleson = spec.kind == CriterionKind::CM;
    let cut = (0.75 * grid.radius()).powi(2);
    let finish = |total: f64, outer: f64| -> Option<f64> {
        if total > 0.0 && (outer / total > DIVERGENCE_SHARE || !total.is_finite()) {
            None
        } else {
            Some(total.powf(1.0 / s))
        }
    };

    let nodes = grid.nodes();
    let dv = values_at(&nodes, |z| {
        let v = criterion_value(spec, z)?;
        Ok(if v == 0.0 {
            0.0
        } else if carleson {
            v.powf(s) * spec.weight.eval(z)
        } else {
            v.powf(s)
        })
    })?;
    let (mut total, mut outer) = (0.0, 0.0);
    for (z, v) in nodes.iter().zip(&dv) {
        total += v;
        if z.norm_sq() > cut {
            outer += v;
        }
    }
    let direct = finish(total * grid.cell_volume(), outer * grid.cell_volume());

    let lattice = lattice_points(spec.r, grid.radius(), spec.dim())?;
    let cell = spec.r.powi(2 * spec.dim() as i32);
    let lv = values_at(&lattice, |nu| {
        let v = spec.lattice_value(nu)?;
        Ok(if v == 0.0 {
            0.0
        } else if carleson {
            v.powf(s) * spec.weight.mass_on_cube(&Cube::new(*nu, spec.r)?)?
        } else {
            v.powf(s) * cell
        })
    })?;
    let (mut ltotal, mut louter) = (0.0, 0.0);
    for (nu, v) in lattice.iter().zip(&lv) {
        ltotal += v;
        if nu.norm_sq() > cut {
            louter += v;
        }
    }
    let lattice = finish(ltotal, louter);
    Ok(match (direct, lattice) {
        (Some(direct), Some(lattice)) => IntegralCriterion {
            direct,
            lattice,
            integrable: true,
        },
        _ => IntegralCriterion {
            direct: f64::INFINITY,
            lattice: f64::INFINITY,
            integrable: false,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub vanishing: bool,
    /// `(ρ_k, sup over ρ_k ≤ |z| < ρ_{k+1})`, the last shell two units wide.
    pub shells: Vec<(f64, f64)>,
}

/// Shell suprema of the criterion; vanishing iff the last shell is below
/// `eps` and the last three shells are non-increasing.
pub fn decay_test(
    spec: &CriterionSpec,
    shell_radii: &[f64],
    eps: f64,
    step: f64,
) -> Result<DecayProfile> {
    if shell_radii.is_empty() || shell_radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(
            "shell radii must be non-empty and increasing",
        ));
    }
    let outer = shell_radii[shell_radii.len() - 1] + 2.0;
    let points = lattice_points(step, outer, spec.dim())?;
    let mut shells = Vec::with_capacity(shell_radii.len());
    for (k, rho) in shell_radii.iter().enumerate() {
        let next = shell_radii.get(k + 1).copied().unwrap_or(outer);
        let ring: Vec<Point> = points
            .iter()
            .filter(|z| {
                let r = z.norm();
                r >= *rho && r < next
            })
            .copied()
            .collect();
        let vals = values_at(&ring, |z| criterion_value(spec, z))?;
        shells.push((*rho, vals.iter().cloned().fold(0.0, f64::max)));
    }
    let tail: Vec<f64> = shells.iter().rev().take(3).map(|s| s.1).collect();
    let non_increasing = tail.windows(2).all(|w| w[0] <= w[1]);
    // an identically zero criterion vanishes trivially
    let vanishing = non_increasing && (tail[0] < eps || tail[0] == 0.0);
    Ok(DecayProfile { vanishing, shells })
}

/// Evaluation knobs for [`criterion_report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaPolicy {
    pub r_sup: f64,
    pub fine_step: f64,
    pub shell_radii: Vec<f64>,
    /// Grid step inside the decay shells.
    pub decay_step: f64,
    /// Vanishing threshold relative to the fine-grid supremum.
    pub eps_rel: f64,
    pub integral_step: f64,
    pub integral_radius: f64,
}

impl Default for CriteriaPolicy {
    fn default() -> Self {
        CriteriaPolicy {
            r_sup: 8.0,
            fine_step: 0.05,
            shell_radii: vec![4.0, 6.0, 8.0, 10.0],
            decay_step: 0.25,
            eps_rel: 0.25,
            integral_step: 0.1,
            integral_radius: 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub bounded: bool,
    pub vanishing: bool,
    pub integrable: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub sup: SupCriterion,
    pub integral: Option<IntegralCriterion>,
    pub decay: DecayProfile,
    pub verdicts: Verdicts,
}

/// All criterion quantities of `spec`; the integral criterion only for `p > q`.
pub fn criterion_report(spec: &CriterionSpec, policy: &CriteriaPolicy) -> Result<CriterionReport> {
    let sup = sup_criterion(spec, policy.r_sup, policy.fine_step)?;
    let eps = policy.eps_rel * sup.fine_sup;
    let decay = decay_test(spec, &policy.shell_radii, eps, policy.decay_step)?;
    let integral = if spec.integral_exponent().is_some() {
        let grid = QuadratureGrid::new(policy.integral_step, policy.integral_radius, spec.dim())?;
        Some(integral_criterion(spec, &grid)?)
    } else {
        None
    };
    let tail: Vec<f64> = decay.shells.iter().rev().take(3).map(|s| s.1).collect();
    let bounded =
        sup.fine_sup < MEMBERSHIP_SENTINEL && tail.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-9));
    Ok(CriterionReport {
        verdicts: Verdicts {
            bounded,
            vanishing: decay.vanishing,
            integrable: integral.map(|i| i.integrable),
        },
        sup,
        integral,
        decay,
    })
}
