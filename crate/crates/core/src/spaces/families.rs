//! Test functions: normalized kernels, Rademacher combinations, and the
//! pointwise sub-mean-value ratio.

use std::f64::consts::PI;

use super::{base_norm_integral, EntireFunction, FockParams, KernelTerm};
use crate::error::{Error, Ratio, Result};
use crate::numerics::{ball_rule, Ball, Point, QuadratureGrid};

/// `‖K^α_u‖_{F^p_α}` for `w ≡ 1`: `(e^{pα|u|²/2}(2π/(pα))ⁿ)^{1/p}`.
pub fn kernel_norm_closed_form(u: &Point, p: f64, alpha: f64) -> f64 {
    let n = u.dim() as f64;
    (0.5 * alpha * u.norm_sq() + n / p * (2.0 * PI / (p * alpha)).ln()).exp()
}

/// `f_z(u) = e^{α⟨u,z⟩ − α|z|²/2} / w(B_1(z))^{1/p}`.
pub fn normalized_kernel(z: &Point, fp: &FockParams) -> Result<EntireFunction> {
    let wb = fp.weight.positive_ball_mass(z, 1.0)?;
    let term = KernelTerm {
        ln_mag: -0.5 * fp.alpha * z.norm_sq() - wb.ln() / fp.p,
        phase: 0.0,
        center: *z,
        alpha: fp.alpha,
    };
    EntireFunction::from_terms(z.dim(), vec![term], Vec::new())
}

/// `ln ‖K^α_ν‖_{F^p_{α,w}}` for each center, by quadrature.
pub fn kernel_norms(centers: &[Point], fp: &FockParams, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    centers
        .iter()
        .map(|nu| {
            // integrate the damped kernel e^{−α|ν|²/2} K_ν, then undo the damping
            let shift = 0.5 * fp.alpha * nu.norm_sq();
            let term = KernelTerm {
                ln_mag: -shift,
                phase: 0.0,
                center: *nu,
                alpha: fp.alpha,
            };
            let f = EntireFunction::from_terms(nu.dim(), vec![term], Vec::new())?;
            let ln = base_norm_integral(&f, fp, grid)?.ln() / fp.p + shift;
            if ln.is_finite() {
                Ok(ln)
            } else {
                Err(Error::Diverged(format!(
                    "kernel norm at {nu} is not finite"
                )))
            }
        })
        .collect()
}

/// `Σ c_ν·s_ν·K^α_ν/‖K^α_ν‖` from precomputed log-norms.
pub fn rademacher_from_norms(
    coeffs: &[(Point, f64)],
    signs: &[f64],
    ln_norms: &[f64],
    alpha: f64,
) -> Result<EntireFunction> {
    if coeffs.len() != signs.len() || coeffs.len() != ln_norms.len() {
        return Err(Error::invalid(format!(
            "{} coefficients, {} signs and {} norms",
            coeffs.len(),
            signs.len(),
            ln_norms.len()
        )));
    }
    let dim = coeffs.first().map_or(1, |c| c.0.dim());
    let mut kernels = Vec::with_capacity(coeffs.len());
    for (((nu, c), s), ln) in coeffs.iter().zip(signs).zip(ln_norms) {
        let c = c * s;
        if c == 0.0 {
            continue;
        }
        kernels.push(KernelTerm {
            ln_mag: c.abs().ln() - ln,
            phase: if c < 0.0 { PI } else { 0.0 },
            center: *nu,
            alpha,
        });
    }
    EntireFunction::from_terms(dim, kernels, Vec::new())
}

/// `F_τ = Σ c_ν r_ν(τ) f_ν` with `f_ν = K^α_ν/‖K^α_ν‖_{F^p_{α,w}}`.
pub fn rademacher_combination(
    coeffs: &[(Point, f64)],
    signs: &[f64],
    fp: &FockParams,
    grid: &QuadratureGrid,
) -> Result<EntireFunction> {
    let centers: Vec<Point> = coeffs.iter().map(|c| c.0).collect();
    let norms = kernel_norms(&centers, fp, grid)?;
    rademacher_from_norms(coeffs, signs, &norms, fp.alpha)
}

/// `|f(z)|^p e^{−pα|z|²/2}` over the `w`-average of the same quantity on `B_r(z)`.
pub fn pointwise_bound_ratio(
    f: &EntireFunction,
    fp: &FockParams,
    z: &Point,
    r: f64,
) -> Result<Ratio> {
    let ball = Ball::new(*z, r)?;
    let scale = f.factor().norm();
    let num = (scale * f.base_damped_abs(z, fp.alpha)).powf(fp.p);
    let mut integral = 0.0;
    for (u, wt) in ball_rule(z.dim()).map(&ball) {
        integral += wt * (scale * f.base_damped_abs(&u, fp.alpha)).powf(fp.p) * fp.weight.eval(&u);
    }
    let wb = fp.weight.positive_ball_mass(z, r)?;
    Ok(Ratio::from_parts(num, integral / wb))
}
