//! Lattice-versus-direct consistency of the criteria and its stability under
//! grid refinement.

use serde::{Deserialize, Serialize};

use super::fixtures;
use crate::criteria::{
    integral_criterion, sup_criterion, CriteriaPolicy, CriterionKind, CriterionSpec,
};
use crate::error::Result;
use crate::numerics::QuadratureGrid;

/// A lattice/direct ratio at step `h` and at `h/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedRatio {
    pub ratio: f64,
    pub refined: f64,
}

impl RefinedRatio {
    /// Relative change of the ratio under refinement.
    pub fn drift(&self) -> f64 {
        (self.refined - self.ratio).abs() / self.refined.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationCheck {
    pub kind: CriterionKind,
    pub p: f64,
    pub q: f64,
    /// `lattice sup / fine sup`; `None` when both vanish.
    pub sup: Option<RefinedRatio>,
    /// `lattice / direct` of the integral criterion, for `p > q` only.
    pub integral: Option<RefinedRatio>,
    /// Frozen `C_dis` the ratios are held to.
    pub c_sup: f64,
    pub c_integral: f64,
    pub failures: Vec<String>,
}

impl DiscretizationCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0 && num.is_finite() && den.is_finite()).then(|| num / den)
}

/// Compares lattice and direct values of `spec` at the policy steps and at
/// half of them, against the frozen band and drift limit.
pub fn discretization_check(
    spec: &CriterionSpec,
    policy: &CriteriaPolicy,
) -> Result<DiscretizationCheck> {
    let dim = spec.dim();
    let c_sup = fixtures::c_dis_sup(dim, spec.kind);
    let c_integral = fixtures::c_dis_integral(dim, spec.kind);
    let mut failures = Vec::new();

    let coarse = sup_criterion(spec, policy.r_sup, policy.fine_step)?;
    let fine = sup_criterion(spec, policy.r_sup, policy.fine_step / 2.0)?;
    let sup = match (
        ratio(coarse.lattice_sup, coarse.fine_sup),
        ratio(fine.lattice_sup, fine.fine_sup),
    ) {
        (Some(ratio), Some(refined)) => Some(RefinedRatio { ratio, refined }),
        _ => {
            if coarse.fine_sup > 0.0 || coarse.lattice_sup > 0.0 {
                failures.push(format!(
                    "sup criterion: lattice {} against direct {}",
                    coarse.lattice_sup, coarse.fine_sup
                ));
            }
            None
        }
    };

    let integral = if spec.integral_exponent().is_some() {
        let grid = QuadratureGrid::new(policy.integral_step, policy.integral_radius, dim)?;
        let a = integral_criterion(spec, &grid)?;
        let b = integral_criterion(spec, &grid.refined())?;
        match (ratio(a.lattice, a.direct), ratio(b.lattice, b.direct)) {
            (Some(ratio), Some(refined)) => Some(RefinedRatio { ratio, refined }),
            _ => {
                if a.direct > 0.0 || a.lattice > 0.0 {
                    failures.push(format!(
                        "integral criterion: lattice {} against direct {}",
                        a.lattice, a.direct
                    ));
                }
                None
            }
        }
    } else {
        None
    };

    for (name, r, c) in [("sup", sup, c_sup), ("integral", integral, c_integral)] {
        let Some(r) = r else { continue };
        for x in [r.ratio, r.refined] {
            if !(x >= 1.0 / c && x <= c) {
                failures.push(format!(
                    "{name} lattice/direct = {x:.6e} outside [1/{c}, {c}]"
                ));
            }
        }
        if r.drift() > fixtures::REFINEMENT_DRIFT {
            failures.push(format!(
                "{name} lattice/direct drifts by {:.2}% under h → h/2",
                100.0 * r.drift()
            ));
        }
    }
    Ok(DiscretizationCheck {
        kind: spec.kind,
        p: spec.p,
        q: spec.q,
        sup,
        integral,
        c_sup,
        c_integral,
        failures,
    })
}
