//! Standalone forms of the lattice upper sum and the test-family lower bounds.

use super::engine::{estimate, lattice_cells, Operator, Problem};
use super::FamilySpec;
use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::numerics::{ball_rule, Ball, QuadratureGrid};
use crate::operators::BerezinParams;
use crate::spaces::{EntireFunction, SHELL_TOLERANCE};
use crate::weights::Weight;

fn lattice_sum(
    mu: &Measure,
    f: &EntireFunction,
    p: f64,
    q: f64,
    alpha: f64,
    w: &Weight,
    grid: &QuadratureGrid,
    op: Operator,
) -> Result<f64> {
    if !(p > 0.0 && q > 0.0 && alpha > 0.0) {
        return Err(Error::invalid(format!(
            "exponents and α must be positive (p={p}, q={q}, α={alpha})"
        )));
    }
    if mu.dim() != f.dim() || w.dim() != f.dim() {
        return Err(Error::invalid(
            "measure, function and weight dimensions differ",
        ));
    }
    let dim = mu.dim();
    let (g, e) = op.lattice_exponents(p, q);
    let rule = ball_rule(dim);
    let support = mu.support_radius();
    // cubes Q_1(ν) meet supp μ only if |ν| < support + √(2n)/2
    let reach = support + (2.0 * dim as f64).sqrt() / 2.0;
    let mut radius = grid.radius();
    let mut previous: Option<f64> = None;
    for attempt in 0..3 {
        let cells = lattice_cells(mu, w, radius.min(reach), |m, wq| m.powf(g) / wq.powf(e))?;
        let mut total = 0.0;
        for (nu, a) in cells {
            let ball = Ball::new(nu, 2.0 * dim as f64)?;
            let mut integral = 0.0;
            for (u, rw) in rule.map(&ball) {
                let v = f.eval_damped(&u, alpha)?.norm();
                if v > 0.0 {
                    integral += rw * (p * v.ln() + w.ln_eval(&u)).exp();
                }
            }
            total += a * integral.powf(q / p);
        }
        if !total.is_finite() {
            return Err(Error::Diverged(format!(
                "lattice upper sum is not finite at radius {radius}"
            )));
        }
        if reach <= radius {
            return Ok(total);
        }
        if let Some(prev) = previous {
            if total - prev <= SHELL_TOLERANCE * total {
                return Ok(total);
            }
        }
        if attempt == 2 {
            return Err(Error::Diverged(format!(
                "lattice upper sum still grows under truncation doubling ({} → {total} at radius {radius})",
                previous.unwrap_or(0.0)
            )));
        }
        previous = Some(total);
        radius *= 2.0;
    }
    unreachable!()
}

/// `Σ_ν μ(Q_1(ν))^{q/t} / w(Q_1(ν))^{q/p−1} · (∫_{B_{2n}(ν)} |f|^p e^{−pα|u|²/2} w dv)^{q/p}`
/// over `ν ∈ ℤ²ⁿ`, truncated at the grid radius and doubled while it grows.
#[allow(clippy::too_many_arguments)]
pub fn suff_upper_bound(
    mu: &Measure,
    f: &EntireFunction,
    p: f64,
    q: f64,
    t: f64,
    alpha: f64,
    w: &Weight,
    grid: &QuadratureGrid,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::invalid(format!("t must be positive, got {t}")));
    }
    lattice_sum(
        mu,
        f,
        p,
        q,
        alpha,
        w,
        grid,
        Operator::Berezin { t, beta: 1.0 },
    )
}

/// The embedding analogue `Σ_ν μ(Q_1(ν)) / w(Q_1(ν))^{q/p} · (∫_{B_{2n}(ν)} …)^{q/p}`.
pub fn carleson_upper_bound(
    mu: &Measure,
    f: &EntireFunction,
    p: f64,
    q: f64,
    alpha: f64,
    w: &Weight,
    grid: &QuadratureGrid,
) -> Result<f64> {
    lattice_sum(mu, f, p, q, alpha, w, grid, Operator::Embedding)
}

/// Largest `‖S f‖_{L^q(w dv)} / ‖f‖_{F^p_{α,w}}` over the kernel and
/// Rademacher test family.
#[allow(clippy::too_many_arguments)]
pub fn estimate_s_norm_lower(
    mu: &Measure,
    bp: &BerezinParams,
    p: f64,
    q: f64,
    w: &Weight,
    family: &FamilySpec,
    seed: u64,
    grid: &QuadratureGrid,
) -> Result<f64> {
    check_family(family)?;
    let prob = Problem {
        mu,
        w,
        p,
        q,
        alpha: bp.alpha,
        op: Operator::Berezin {
            t: bp.t,
            beta: bp.beta,
        },
        grid,
        family: *family,
        seed,
    };
    Ok(estimate(&prob, 1.0)?.lower)
}

/// Largest `‖T f‖_{F^q_{α,w}} / ‖f‖_{F^p_{α,w}}` over the test family.
#[allow(clippy::too_many_arguments)]
pub fn estimate_t_norm_lower(
    mu: &Measure,
    alpha: f64,
    p: f64,
    q: f64,
    w: &Weight,
    family: &FamilySpec,
    seed: u64,
    grid: &QuadratureGrid,
) -> Result<f64> {
    check_family(family)?;
    let prob = Problem {
        mu,
        w,
        p,
        q,
        alpha,
        op: Operator::Toeplitz,
        grid,
        family: *family,
        seed,
    };
    Ok(estimate(&prob, 1.0)?.lower)
}

pub(crate) fn check_family(family: &FamilySpec) -> Result<()> {
    if !(family.rademacher_radius >= 0.0) {
        return Err(Error::invalid(
            "family.rademacher_radius must be non-negative",
        ));
    }
    Ok(())
}
