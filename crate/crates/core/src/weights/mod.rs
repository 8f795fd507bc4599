//! Positive weights on ℂⁿ and their set masses `w(E) = ∫_E w dv`.

mod class;

pub use class::{
    a1_restricted_constant, a_infinity_verdict, ap_restricted_constant, doubling_and_growth,
    weight_class_report, AInfinityVerdict, ClassEstimate, Doubling, WeightClassReport,
    MEMBERSHIP_SENTINEL,
};

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ball_rule, check_dim, cube_gauss_rule, cube_vertex_grid, Ball, Cube, Point};

/// How a tabulated weight is read between table nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interp {
    Nearest,
    Multilinear,
}

/// Positive values on the tensor grid `step·{−m,…,m}^{2n}`, last coordinate
/// fastest. Outside the grid the weight is extended by clamping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub step: f64,
    pub half_width: usize,
    pub values: Vec<f64>,
    pub interp: Interp,
}

impl Table {
    fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidWeight(format!(
                "table step must be positive, got {}",
                self.step
            )));
        }
        let expected = self.side().pow(2 * dim as u32);
        if self.values.len() != expected {
            return Err(Error::InvalidWeight(format!(
                "table needs {expected} values for half_width {} in C^{dim}, got {}",
                self.half_width,
                self.values.len()
            )));
        }
        if let Some((i, v)) = self
            .values
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v > 0.0))
        {
            return Err(Error::InvalidWeight(format!(
                "table value #{i} is {v}; weights must be strictly positive"
            )));
        }
        Ok(())
    }

    fn eval(&self, z: &Point) -> f64 {
        let m = self.half_width as f64;
        let side = self.side();
        let d = z.coords().len();
        // fractional grid coordinates, clamped to the table
        let mut base = [0usize; 4];
        let mut frac = [0.0; 4];
        for i in 0..d {
            let x = (z.coord(i) / self.step + m).clamp(0.0, 2.0 * m);
            match self.interp {
                Interp::Nearest => base[i] = x.round() as usize,
                Interp::Multilinear => {
                    let b = (x.floor() as usize).min(side.saturating_sub(2));
                    base[i] = b;
                    frac[i] = x - b as f64;
                }
            }
        }
        let index = |offs: &[usize; 4]| -> usize {
            (0..d).fold(0, |acc, i| acc * side + (base[i] + offs[i]).min(side - 1))
        };
        match self.interp {
            Interp::Nearest => self.values[index(&[0; 4])],
            Interp::Multilinear => {
                let mut acc = 0.0;
                for corner in 0..(1usize << d) {
                    let mut offs = [0usize; 4];
                    let mut coef = 1.0;
                    for i in 0..d {
                        let bit = (corner >> (d - 1 - i)) & 1;
                        offs[i] = bit;
                        coef *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
                    }
                    if coef != 0.0 {
                        acc += coef * self.values[index(&offs)];
                    }
                }
                acc
            }
        }
    }
}

/// The shipped weight families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightKind {
    /// `w ≡ c`.
    Constant {
        c: f64,
    },
    /// `w(z) = e^{a·z}` with `a ∈ ℝ²ⁿ`.
    ExpLinear {
        a: Vec<f64>,
    },
    /// `w(z) = (1+|z|²)^s e^{−ε|z|²}`. Negative `ε` is accepted so that
    /// non-members of `A^res_∞` such as `e^{|z|²}` can be examined.
    RadialPowerGauss {
        s: f64,
        eps: f64,
    },
    Tabulated(Table),
}

impl WeightKind {
    pub fn label(&self) -> &'static str {
        match self {
            WeightKind::Constant { .. } => "constant",
            WeightKind::ExpLinear { .. } => "exp-linear",
            WeightKind::RadialPowerGauss { .. } => "radial-power-gauss",
            WeightKind::Tabulated(_) => "tabulated",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Shape {
    Cube,
    Ball,
}

type MassKey = (Shape, [u64; 4], u64, u64);

/// A strictly positive weight with a shared cache of set masses.
///
/// Cloning shares the cache; [`Weight::scaled`] starts a fresh one.
#[derive(Debug, Clone)]
pub struct Weight {
    kind: WeightKind,
    dim: usize,
    factor: f64,
    cache: Arc<RwLock<HashMap<MassKey, f64>>>,
}

impl PartialEq for Weight {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind && self.dim == other.dim && self.factor == other.factor
    }
}

impl Weight {
    pub fn new(kind: WeightKind, dim: usize) -> Result<Self> {
        check_dim(dim)?;
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidWeight(format!(
                    "{what} must be finite, got {x}"
                )))
            }
        };
        match &kind {
            WeightKind::Constant { c } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::InvalidWeight(format!(
                        "constant weight must be positive, got {c}"
                    )));
                }
            }
            WeightKind::ExpLinear { a } => {
                if a.len() != 2 * dim {
                    return Err(Error::InvalidWeight(format!(
                        "exp-linear weight in C^{dim} needs {} coefficients, got {}",
                        2 * dim,
                        a.len()
                    )));
                }
                for x in a {
                    finite(*x, "exp-linear coefficient")?;
                }
            }
            WeightKind::RadialPowerGauss { s, eps } => {
                finite(*s, "radial power s")?;
                finite(*eps, "gaussian rate eps")?;
            }
            WeightKind::Tabulated(t) => t.validate(dim)?,
        }
        Ok(Weight {
            kind,
            dim,
            factor: 1.0,
            cache: Arc::default(),
        })
    }

    pub fn constant(c: f64, dim: usize) -> Result<Self> {
        Weight::new(WeightKind::Constant { c }, dim)
    }

    /// `w ≡ 1` on ℂⁿ.
    pub fn unit(dim: usize) -> Self {
        Weight::constant(1.0, dim).expect("unit weight is valid")
    }

    pub fn exp_linear(a: &[f64]) -> Result<Self> {
        Weight::new(WeightKind::ExpLinear { a: a.to_vec() }, a.len() / 2)
    }

    pub fn radial_power_gauss(s: f64, eps: f64, dim: usize) -> Result<Self> {
        Weight::new(WeightKind::RadialPowerGauss { s, eps }, dim)
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Overall multiplicative factor applied on top of the kind.
    pub fn factor(&self) -> f64 {
        self.factor
    }

    /// `λ·w`; masses scale by λ and the class constants are unchanged.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidWeight(format!(
                "weight scale factor must be positive, got {lambda}"
            )));
        }
        Ok(Weight {
            kind: self.kind.clone(),
            dim: self.dim,
            factor: self.factor * lambda,
            cache: Arc::default(),
        })
    }

    /// Unscaled value of the kind at `z` (the constant kind counts as 1).
    fn base(&self, z: &Point) -> f64 {
        match &self.kind {
            WeightKind::Constant { .. } => 1.0,
            WeightKind::ExpLinear { a } => {
                let s: f64 = a.iter().zip(z.coords()).map(|(a, x)| a * x).sum();
                s.exp()
            }
            WeightKind::RadialPowerGauss { s, eps } => {
                let r2 = z.norm_sq();
                (s * r2.ln_1p() - eps * r2).exp()
            }
            WeightKind::Tabulated(t) => t.eval(z),
        }
    }

    fn scale(&self) -> f64 {
        match &self.kind {
            WeightKind::Constant { c } => c * self.factor,
            _ => self.factor,
        }
    }

    pub fn eval(&self, z: &Point) -> f64 {
        self.scale() * self.base(z)
    }

    pub fn ln_eval(&self, z: &Point) -> f64 {
        let b = match &self.kind {
            WeightKind::Constant { .. } => 0.0,
            WeightKind::ExpLinear { a } => a.iter().zip(z.coords()).map(|(a, x)| a * x).sum(),
            WeightKind::RadialPowerGauss { s, eps } => {
                let r2 = z.norm_sq();
                s * r2.ln_1p() - eps * r2
            }
            WeightKind::Tabulated(t) => t.eval(z).ln(),
        };
        self.scale().ln() + b
    }

    fn checked_base(&self, z: &Point, gamma: f64) -> Result<f64> {
        let v = self.base(z).powf(gamma);
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(Error::domain(
                *z,
                v,
                format!("weight^{gamma} ({})", self.kind.label()),
            ))
        }
    }

    fn cached(&self, key: MassKey, compute: impl FnOnce() -> Result<f64>) -> Result<f64> {
        if let Some(v) = self.cache.read().expect("mass cache poisoned").get(&key) {
            return Ok(*v);
        }
        let v = compute()?;
        self.cache
            .write()
            .expect("mass cache poisoned")
            .insert(key, v);
        Ok(v)
    }

    fn key(shape: Shape, center: &Point, size: f64, gamma: f64) -> MassKey {
        let mut c = [0u64; 4];
        for (k, x) in c.iter_mut().zip(center.coords()) {
            *k = x.to_bits();
        }
        (shape, c, size.to_bits(), gamma.to_bits())
    }

    /// `∫_Q (w/scale)^γ dv` for the unscaled kind.
    pub(crate) fn base_power_mass_on_cube(&self, q: &Cube, gamma: f64) -> Result<f64> {
        q.center.check_dim(self.dim)?;
        match &self.kind {
            WeightKind::Constant { .. } => Ok(q.volume()),
            WeightKind::ExpLinear { a } => {
                let h = q.side / 2.0;
                let mut ln = 0.0;
                for (ai, ci) in a.iter().zip(q.center.coords()) {
                    let g = gamma * ai;
                    ln += g * ci;
                    ln += if g == 0.0 {
                        q.side.ln()
                    } else {
                        // 2 sinh(g h) / g, evaluated without cancellation
                        (2.0 * (g * h).sinh() / g).ln()
                    };
                }
                let v = ln.exp();
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::domain(q.center, v, "exp-linear cube mass"))
                }
            }
            _ => self.cached(Weight::key(Shape::Cube, &q.center, q.side, gamma), || {
                let order = if self.dim == 1 { 8 } else { 4 };
                let (nodes, weights) = cube_gauss_rule(q, order);
                let mut acc = 0.0;
                for (p, w) in nodes.iter().zip(&weights) {
                    acc += w * self.checked_base(p, gamma)?;
                }
                Ok(acc)
            }),
        }
    }

    /// Infimum of the unscaled kind over the closed cube, read off a vertex grid.
    pub(crate) fn base_inf_on_cube(&self, q: &Cube, max_step: f64) -> Result<f64> {
        q.center.check_dim(self.dim)?;
        match &self.kind {
            WeightKind::Constant { .. } => Ok(1.0),
            WeightKind::ExpLinear { a } => {
                let h = q.side / 2.0;
                let s: f64 = a
                    .iter()
                    .zip(q.center.coords())
                    .map(|(a, c)| a * c - a.abs() * h)
                    .sum();
                Ok(s.exp())
            }
            _ => {
                let mut m = f64::INFINITY;
                for p in cube_vertex_grid(q, max_step) {
                    m = m.min(self.checked_base(&p, 1.0)?);
                }
                Ok(m)
            }
        }
    }

    /// `w(Q) = ∫_Q w dv`.
    pub fn mass_on_cube(&self, q: &Cube) -> Result<f64> {
        Ok(self.scale() * self.base_power_mass_on_cube(q, 1.0)?)
    }

    /// `w(B) = ∫_B w dv`.
    pub fn mass_on_ball(&self, b: &Ball) -> Result<f64> {
        b.center.check_dim(self.dim)?;
        let base = match &self.kind {
            WeightKind::Constant { .. } => b.volume(),
            _ => self.cached(Weight::key(Shape::Ball, &b.center, b.radius, 1.0), || {
                let mut acc = 0.0;
                for (p, w) in ball_rule(self.dim).map(b) {
                    acc += w * self.checked_base(&p, 1.0)?;
                }
                Ok(acc)
            })?,
        };
        Ok(self.scale() * base)
    }

    /// `w(B_r(z))`, failing with [`Error::InvalidWeight`] when it vanishes.
    pub fn positive_ball_mass(&self, z: &Point, r: f64) -> Result<f64> {
        let m = self.mass_on_ball(&Ball::new(*z, r)?)?;
        if m > 0.0 {
            Ok(m)
        } else {
            Err(Error::InvalidWeight(format!("w(B_{r}({z})) = {m}")))
        }
    }
}
