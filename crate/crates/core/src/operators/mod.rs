//! The Berezin-type operator `S^{t,α,β}_μ`, the Toeplitz-type operator
//! `T^α_μ`, the Fock projection `P_α`, and their target-space norms.

mod batch;

pub use batch::{gaussian_batch, toeplitz_batch, MeasureSamples};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::numerics::{try_par_map, Point, QuadratureGrid};
use crate::spaces::{EntireFunction, SHELL_TOLERANCE};
use crate::weights::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerezinParams {
    pub t: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl BerezinParams {
    pub fn new(t: f64, alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("t", t), ("alpha", alpha), ("beta", beta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "BerezinParams.{name} must be positive, got {v}"
                )));
            }
        }
        Ok(BerezinParams { t, alpha, beta })
    }
}

fn check_dims(mu: &Measure, f: &EntireFunction, grid: &QuadratureGrid) -> Result<()> {
    if mu.dim() != f.dim() || grid.dim() != f.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: measure C^{}, function C^{}, grid C^{}",
            mu.dim(),
            f.dim(),
            grid.dim()
        )));
    }
    Ok(())
}

/// Samples of μ on `grid`, retrying with doubled radius (twice at most)
/// while density samples near the edge carry more than the shell tolerance.
fn samples_with_shell_check<F>(
    mu: &Measure,
    grid: &QuadratureGrid,
    what: &str,
    shell_share: F,
) -> Result<MeasureSamples>
where
    F: Fn(&MeasureSamples, f64) -> (f64, f64),
{
    let mut g = *grid;
    for attempt in 0..3 {
        let samples = MeasureSamples::new(mu, &g);
        if mu.density().is_none() || mu.density().unwrap().support_radius() < g.radius() - 1.0 {
            return Ok(samples);
        }
        let inner = (g.radius() - 1.0).max(0.0);
        let (total, shell) = shell_share(&samples, inner);
        if total == 0.0 || shell <= SHELL_TOLERANCE * total {
            return Ok(samples);
        }
        if attempt == 2 {
            return Err(Error::Diverged(format!(
                "{what}: outer shell of the density integral carries {:.3e} of {:.6e} at radius {}",
                shell / total,
                total,
                g.radius()
            )));
        }
        g = g.with_radius(2.0 * g.radius())?;
    }
    unreachable!()
}

fn shell_mask(samples: &MeasureSamples, inner: f64) -> Vec<bool> {
    samples
        .points
        .iter()
        .enumerate()
        .map(|(i, u)| i >= samples.atom_count && u.norm() > inner)
        .collect()
}

/// `S f(z)` at each target, with the density part of μ integrated on `grid`.
pub fn berezin_field(
    mu: &Measure,
    f: &EntireFunction,
    bp: &BerezinParams,
    targets: &[Point],
    grid: &QuadratureGrid,
) -> Result<Vec<f64>> {
    check_dims(mu, f, grid)?;
    if mu.is_zero() || f.is_zero() {
        return Ok(vec![0.0; targets.len()]);
    }
    let values = |s: &MeasureSamples| -> Vec<f64> {
        s.points
            .iter()
            .map(|u| f.base_damped_abs(u, bp.alpha).powf(bp.t))
            .collect()
    };
    let samples = samples_with_shell_check(mu, grid, "Berezin transform", |s, inner| {
        let mask = shell_mask(s, inner);
        let v = values(s);
        let two: Vec<f64> = v
            .iter()
            .zip(&mask)
            .flat_map(|(x, m)| [*x, if *m { *x } else { 0.0 }])
            .collect();
        let out = gaussian_batch(s, &two, 2, bp.beta, targets);
        out.chunks(2)
            .fold((0.0, 0.0), |(a, b), c| (a + c[0], b + c[1]))
    })?;
    let v = values(&samples);
    let scale = f.factor().norm();
    let sums = gaussian_batch(&samples, &v, 1, bp.beta, targets);
    sums.into_iter()
        .zip(targets)
        .map(|(s, z)| {
            let out = scale * s.powf(1.0 / bp.t);
            if out.is_finite() {
                Ok(out)
            } else {
                Err(Error::domain(*z, out, "Berezin transform"))
            }
        })
        .collect()
}

/// `S^{t,α,β}_μ f(z) = (∫ e^{−β|z−u|²/2} |f(u)|^t e^{−αt|u|²/2} dμ(u))^{1/t}`.
pub fn berezin_apply(
    mu: &Measure,
    f: &EntireFunction,
    bp: &BerezinParams,
    z: &Point,
    grid: &QuadratureGrid,
) -> Result<f64> {
    Ok(berezin_field(mu, f, bp, &[*z], grid)?[0])
}

/// `T f(z)·e^{−α|z|²/2}` at each target.
pub fn toeplitz_field_damped(
    mu: &Measure,
    f: &EntireFunction,
    alpha: f64,
    targets: &[Point],
    grid: &QuadratureGrid,
) -> Result<Vec<Complex64>> {
    check_dims(mu, f, grid)?;
    if mu.is_zero() || f.is_zero() {
        return Ok(vec![Complex64::new(0.0, 0.0); targets.len()]);
    }
    let values = |s: &MeasureSamples| -> Result<Vec<Complex64>> {
        s.points.iter().map(|u| f.eval_damped(u, alpha)).collect()
    };
    let samples = samples_with_shell_check(mu, grid, "Toeplitz transform", |s, inner| {
        let mask = shell_mask(s, inner);
        let v = values(s).unwrap_or_default();
        if v.is_empty() {
            return (0.0, 0.0);
        }
        let two: Vec<f64> = v
            .iter()
            .zip(&mask)
            .flat_map(|(x, m)| [x.norm(), if *m { x.norm() } else { 0.0 }])
            .collect();
        let out = gaussian_batch(s, &two, 2, alpha, targets);
        out.chunks(2)
            .fold((0.0, 0.0), |(a, b), c| (a + c[0], b + c[1]))
    })?;
    let v = values(&samples)?;
    Ok(toeplitz_batch(&samples, &v, 1, alpha, targets))
}

/// `T^α_μ f(z) = ∫ f(u) e^{α⟨z,u⟩ − α|u|²} dμ(u)`.
pub fn toeplitz_apply(
    mu: &Measure,
    f: &EntireFunction,
    alpha: f64,
    z: &Point,
    grid: &QuadratureGrid,
) -> Result<Complex64> {
    let damped = toeplitz_field_damped(mu, f, alpha, &[*z], grid)?[0];
    let v = damped * (0.5 * alpha * z.norm_sq()).exp();
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(*z, v.norm(), "Toeplitz transform overflows"))
    }
}

/// `P_α g(z) = (α/π)ⁿ ∫ g(u) e^{α⟨z,u⟩} e^{−α|u|²} dv(u)`.
pub fn fock_projection<G>(g: G, alpha: f64, z: &Point, grid: &QuadratureGrid) -> Result<Complex64>
where
    G: Fn(&Point) -> Complex64 + Sync,
{
    z.check_dim(grid.dim())?;
    let nodes = grid.nodes();
    let inner = (grid.radius() - 1.0).max(0.0);
    let vals = try_par_map(nodes.len(), |i| {
        let u = &nodes[i];
        let ip = z.inner(u);
        let k = Complex64::new(alpha * ip.re - alpha * u.norm_sq(), alpha * ip.im).exp();
        let v = g(u) * k;
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(*u, v.norm(), "projection integrand"))
        }
    })?;
    let mut total = Complex64::new(0.0, 0.0);
    let (mut abs, mut shell) = (0.0, 0.0);
    for (u, v) in nodes.iter().zip(&vals) {
        total += v;
        abs += v.norm();
        if u.norm() > inner {
            shell += v.norm();
        }
    }
    if abs > 0.0 && shell > SHELL_TOLERANCE * abs {
        return Err(Error::Diverged(format!(
            "projection integrand: outer shell carries {:.3e} at radius {}",
            shell / abs,
            grid.radius()
        )));
    }
    let n = grid.dim() as i32;
    Ok(total * grid.cell_volume() * (alpha / PI).powi(n))
}

/// Outer integral `(Σ_nodes v_i^q w(z_i) h^{2n})^{1/q}` with the shell check.
fn outer_norm(grid: &QuadratureGrid, field: &[f64], q: f64, w: &Weight) -> (f64, f64) {
    let inner_sq = (grid.radius() - 1.0).max(0.0).powi(2);
    let (mut total, mut shell) = (0.0, 0.0);
    for (z, v) in grid.nodes().iter().zip(field) {
        let x = if *v == 0.0 {
            0.0
        } else {
            (q * v.ln() + w.ln_eval(z)).exp()
        };
        total += x;
        if z.norm_sq() > inner_sq {
            shell += x;
        }
    }
    (total * grid.cell_volume(), shell * grid.cell_volume())
}

fn target_norm<F>(grid: &QuadratureGrid, q: f64, w: &Weight, what: &str, field: F) -> Result<f64>
where
    F: Fn(&QuadratureGrid) -> Result<Vec<f64>>,
{
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::invalid(format!(
            "target exponent q must be positive, got {q}"
        )));
    }
    let mut g = *grid;
    for attempt in 0..3 {
        let values = field(&g)?;
        let (total, shell) = outer_norm(&g, &values, q, w);
        if total == 0.0 || shell <= SHELL_TOLERANCE * total {
            return Ok(total.powf(1.0 / q));
        }
        if attempt == 2 {
            return Err(Error::Diverged(format!(
                "{what}: outer shell carries {:.3e} of the target integral at radius {}",
                shell / total,
                g.radius()
            )));
        }
        g = g.with_radius(2.0 * g.radius())?;
    }
    unreachable!()
}

/// `‖S f‖_{L^q(w dv)}`; the grid serves both the outer `z` integral and the
/// density part of μ.
pub fn s_target_norm(
    mu: &Measure,
    f: &EntireFunction,
    bp: &BerezinParams,
    q: f64,
    w: &Weight,
    grid: &QuadratureGrid,
) -> Result<f64> {
    target_norm(grid, q, w, "Berezin target norm", |g| {
        berezin_field(mu, f, bp, &g.nodes(), g)
    })
}

/// `‖T f‖_{F^q_{α,w}}`.
pub fn t_target_norm(
    mu: &Measure,
    f: &EntireFunction,
    alpha: f64,
    q: f64,
    w: &Weight,
    grid: &QuadratureGrid,
) -> Result<f64> {
    target_norm(grid, q, w, "Toeplitz target norm", |g| {
        Ok(toeplitz_field_damped(mu, f, alpha, &g.nodes(), g)?
            .iter()
            .map(|c| c.norm())
            .collect())
    })
}

/// Grid for an outer integral whose integrand decays like `e^{−rate·dist(z, K)²}`,
/// `K` the support of μ (or the kernel centers of `f` when μ is unbounded).
pub fn default_target_grid(
    mu: &Measure,
    f: &EntireFunction,
    rate: f64,
    step: f64,
) -> Result<QuadratureGrid> {
    let support = mu.support_radius();
    let extent = if support.is_finite() {
        support.max(f.kernel_extent())
    } else {
        f.kernel_extent() + 2.0
    };
    QuadratureGrid::covering(step, rate, extent, mu.dim())
}

#[cfg(test)]
mod tests;
