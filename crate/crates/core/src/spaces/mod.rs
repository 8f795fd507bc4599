//! Entire functions built from reproducing kernels and monomials, and the
//! weighted Fock quasi-norms `‖f‖_{F^p_{α,w}}`.

mod families;

pub use families::{
    kernel_norm_closed_form, kernel_norms, normalized_kernel, pointwise_bound_ratio,
    rademacher_combination, rademacher_from_norms,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{check_dim, default_step, integrate_truncated, Point, QuadratureGrid};
use crate::weights::{Weight, WeightKind};

/// `c·K^α_u` with `c = e^{ln_mag + i·phase}` and `K^α_u(z) = e^{α⟨z,u⟩}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelTerm {
    pub ln_mag: f64,
    pub phase: f64,
    pub center: Point,
    pub alpha: f64,
}

impl KernelTerm {
    /// Complex exponent of the term at `z`, shifted by `−shift`.
    fn exponent(&self, z: &Point, shift: f64) -> Complex64 {
        let ip = z.inner(&self.center);
        Complex64::new(
            self.ln_mag + self.alpha * ip.re - shift,
            self.phase + self.alpha * ip.im,
        )
    }
}

/// `c·z^k` for a multi-index `k ∈ ℕⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonomialTerm {
    pub coef: Complex64,
    pub powers: Vec<u32>,
}

impl MonomialTerm {
    fn eval(&self, z: &Point) -> Complex64 {
        self.powers
            .iter()
            .enumerate()
            .fold(self.coef, |acc, (j, k)| acc * z.complex(j).powu(*k))
    }
}

/// A finite combination of kernels and monomials, times an overall factor.
///
/// The overall factor is kept apart so that `c·f` has norms exactly `|c|`
/// times those of `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntireFunction {
    dim: usize,
    factor: Complex64,
    kernels: Vec<KernelTerm>,
    monomials: Vec<MonomialTerm>,
}

impl EntireFunction {
    pub fn zero(dim: usize) -> Self {
        assert!(check_dim(dim).is_ok(), "dimension {dim} unsupported");
        EntireFunction {
            dim,
            factor: Complex64::new(1.0, 0.0),
            kernels: Vec::new(),
            monomials: Vec::new(),
        }
    }

    /// `K^α_u`.
    pub fn kernel(center: Point, alpha: f64) -> Self {
        let mut f = EntireFunction::zero(center.dim());
        f.kernels.push(KernelTerm {
            ln_mag: 0.0,
            phase: 0.0,
            center,
            alpha,
        });
        f
    }

    /// The constant function `c`.
    pub fn constant(c: Complex64, dim: usize) -> Self {
        EntireFunction::monomial(c, vec![0; dim])
    }

    pub fn monomial(coef: Complex64, powers: Vec<u32>) -> Self {
        let mut f = EntireFunction::zero(powers.len());
        f.monomials.push(MonomialTerm { coef, powers });
        f
    }

    pub fn from_terms(
        dim: usize,
        kernels: Vec<KernelTerm>,
        monomials: Vec<MonomialTerm>,
    ) -> Result<Self> {
        check_dim(dim)?;
        for k in &kernels {
            k.center.check_dim(dim)?;
            if !(k.alpha > 0.0 && k.alpha.is_finite()) {
                return Err(Error::invalid(format!(
                    "kernel alpha must be positive, got {}",
                    k.alpha
                )));
            }
            if k.ln_mag.is_nan() || !k.phase.is_finite() {
                return Err(Error::invalid("kernel coefficient must be finite"));
            }
        }
        for m in &monomials {
            if m.powers.len() != dim {
                return Err(Error::invalid(format!(
                    "monomial multi-index has {} entries, expected {dim}",
                    m.powers.len()
                )));
            }
        }
        Ok(EntireFunction {
            dim,
            factor: Complex64::new(1.0, 0.0),
            kernels,
            monomials,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factor(&self) -> Complex64 {
        self.factor
    }

    pub fn kernel_terms(&self) -> &[KernelTerm] {
        &self.kernels
    }

    pub fn monomial_terms(&self) -> &[MonomialTerm] {
        &self.monomials
    }

    pub fn is_zero(&self) -> bool {
        self.factor == Complex64::new(0.0, 0.0)
            || (self.kernels.is_empty() && self.monomials.is_empty())
    }

    /// `c·f`.
    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.factor *= c;
        out
    }

    /// `f + g`; the overall factors are folded into the terms.
    pub fn add(&self, g: &EntireFunction) -> Result<Self> {
        if self.dim != g.dim {
            return Err(Error::invalid(
                "cannot add functions on different dimensions",
            ));
        }
        let mut out = EntireFunction::zero(self.dim);
        for f in [self, g] {
            let (lm, ph) = (f.factor.norm().ln(), f.factor.arg());
            out.kernels.extend(f.kernels.iter().map(|k| KernelTerm {
                ln_mag: k.ln_mag + lm,
                phase: k.phase + ph,
                ..*k
            }));
            out.monomials
                .extend(f.monomials.iter().map(|m| MonomialTerm {
                    coef: m.coef * f.factor,
                    powers: m.powers.clone(),
                }));
        }
        Ok(out)
    }

    /// `f(z)·e^{−shift}` without the overall factor, summed in exponent form.
    fn base_shifted(&self, z: &Point, shift: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in &self.kernels {
            acc += k.exponent(z, shift).exp();
        }
        if !self.monomials.is_empty() {
            let damp = (-shift).exp();
            for m in &self.monomials {
                acc += m.eval(z) * damp;
            }
        }
        acc
    }

    fn checked(&self, z: &Point, v: Complex64, what: &str) -> Result<Complex64> {
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(*z, v.norm(), what.to_string()))
        }
    }

    /// `f(z)`.
    pub fn eval(&self, z: &Point) -> Result<Complex64> {
        z.check_dim(self.dim)?;
        let v = self.factor * self.base_shifted(z, 0.0);
        self.checked(z, v, "entire function value overflows")
    }

    /// `f(z)·e^{−α|z|²/2}`; stays finite where `f(z)` alone would overflow.
    pub fn eval_damped(&self, z: &Point, alpha: f64) -> Result<Complex64> {
        z.check_dim(self.dim)?;
        let v = self.factor * self.base_shifted(z, 0.5 * alpha * z.norm_sq());
        self.checked(z, v, "damped entire function value overflows")
    }

    /// `|f(z)|·e^{−α|z|²/2}` without the overall factor.
    pub(crate) fn base_damped_abs(&self, z: &Point, alpha: f64) -> f64 {
        self.base_shifted(z, 0.5 * alpha * z.norm_sq()).norm()
    }

    /// Largest `|u|` among kernel centers (0 without kernels).
    pub fn kernel_extent(&self) -> f64 {
        self.kernels
            .iter()
            .map(|k| k.center.norm())
            .fold(0.0, f64::max)
    }
}

/// Exponent, Gaussian parameter and weight of `F^p_{α,w}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockParams {
    pub p: f64,
    pub alpha: f64,
    pub weight: Weight,
}

impl FockParams {
    pub fn new(p: f64, alpha: f64, weight: Weight) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::invalid(format!(
                "FockParams.p must be positive, got {p}"
            )));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "FockParams.alpha must be positive, got {alpha}"
            )));
        }
        Ok(FockParams { p, alpha, weight })
    }

    pub fn dim(&self) -> usize {
        self.weight.dim()
    }

    /// A grid whose radius covers the integrand `|f|^p e^{−pα|z|²/2} w`
    /// up to the tail tolerance, for kernels of parameter `α`.
    pub fn covering_grid(&self, f: &EntireFunction) -> Result<QuadratureGrid> {
        let drift = match self.weight.kind() {
            WeightKind::ExpLinear { a } => {
                a.iter().map(|x| x * x).sum::<f64>().sqrt() / (self.p * self.alpha)
            }
            _ => 0.0,
        };
        QuadratureGrid::covering(
            default_step(self.dim()),
            0.5 * self.p * self.alpha,
            f.kernel_extent() + drift + 1.0,
            self.dim(),
        )
    }
}

/// Outer-shell share above which a truncated integral is retried on a larger grid.
pub const SHELL_TOLERANCE: f64 = 1e-6;

/// `∫ |f|^p e^{−pα|z|²/2} w dv` for the unscaled function, with the
/// radius doubled (twice at most) until the outer shell is negligible.
pub(crate) fn base_norm_integral(
    f: &EntireFunction,
    fp: &FockParams,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let mut g = *grid;
    for attempt in 0..3 {
        let t = integrate_truncated(
            |z| {
                let a = f.base_damped_abs(z, fp.alpha);
                if a == 0.0 {
                    0.0
                } else {
                    (fp.p * a.ln() + fp.weight.ln_eval(z)).exp()
                }
            },
            &g,
        )
        .map_err(|e| match e {
            Error::NumericalDomain { point, .. } => Error::Diverged(format!(
                "Fock norm integrand overflows at {point} (radius {})",
                g.radius()
            )),
            other => other,
        })?;
        if t.shell_fraction() <= SHELL_TOLERANCE {
            return Ok(t.value);
        }
        if attempt == 2 {
            return t.converged(SHELL_TOLERANCE, "Fock norm integral");
        }
        g = g.with_radius(2.0 * g.radius())?;
    }
    unreachable!()
}

/// `‖f‖_{F^p_{α,w}} = (∫ |f|^p e^{−pα|z|²/2} w dv)^{1/p}`.
pub fn fock_quasi_norm(f: &EntireFunction, fp: &FockParams, grid: &QuadratureGrid) -> Result<f64> {
    if f.dim() != fp.dim() || grid.dim() != f.dim() {
        return Err(Error::invalid(
            "dimension mismatch between function, weight and grid",
        ));
    }
    if f.is_zero() {
        return Ok(0.0);
    }
    let base = base_norm_integral(f, fp, grid)?.powf(1.0 / fp.p);
    Ok(f.factor().norm() * base)
}
