//! Positive Borel measures on ℂⁿ: finitely many atoms plus an optional density.

mod geometry;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{
    ball_rule, check_dim, cube_gauss_rule, cube_rule, lattice_points, Ball, Cube, Point,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Point,
    pub mass: f64,
}

/// Densities `g·dv` of the shipped families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Density {
    /// `g ≡ c`; `c = 1` is Lebesgue measure.
    Constant { c: f64 },
    /// `g(z) = c·e^{−σ|z|²}`.
    Gaussian { c: f64, sigma: f64 },
    /// `g = c·χ_{B_R(0)}`.
    BallIndicator { c: f64, radius: f64 },
}

impl Density {
    pub fn eval(&self, z: &Point) -> f64 {
        match *self {
            Density::Constant { c } => c,
            Density::Gaussian { c, sigma } => c * (-sigma * z.norm_sq()).exp(),
            Density::BallIndicator { c, radius } => {
                if z.norm_sq() < radius * radius {
                    c
                } else {
                    0.0
                }
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Density::Constant { c } => c >= 0.0 && c.is_finite(),
            Density::Gaussian { c, sigma } => {
                c >= 0.0 && c.is_finite() && sigma > 0.0 && sigma.is_finite()
            }
            Density::BallIndicator { c, radius } => {
                c >= 0.0 && c.is_finite() && radius > 0.0 && radius.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid density {self:?}")))
        }
    }

    /// Radius outside which the density vanishes.
    pub fn support_radius(&self) -> f64 {
        match *self {
            Density::BallIndicator { radius, .. } => radius,
            _ => f64::INFINITY,
        }
    }

    fn ball_mass(&self, b: &Ball) -> f64 {
        let dim = b.center.dim();
        match *self {
            Density::Constant { c } => c * b.volume(),
            Density::BallIndicator { c, radius } => {
                c * geometry::lens_volume(dim, b.radius, radius, b.center.norm())
            }
            Density::Gaussian { .. } => ball_rule(dim).map(b).map(|(p, w)| w * self.eval(&p)).sum(),
        }
    }

    fn cube_mass(&self, q: &Cube) -> f64 {
        let dim = q.center.dim();
        match *self {
            Density::Constant { c } => c * q.volume(),
            Density::Gaussian { .. } => {
                let order = if dim == 1 { 8 } else { 4 };
                let (nodes, w) = cube_gauss_rule(q, order);
                nodes.iter().zip(&w).map(|(p, w)| w * self.eval(p)).sum()
            }
            Density::BallIndicator { c, radius } => {
                let h = q.side / 2.0;
                let mut near = 0.0;
                let mut far = 0.0;
                for x in q.center.coords() {
                    let lo = (x.abs() - h).max(0.0);
                    near += lo * lo;
                    far += (x.abs() + h).powi(2);
                }
                if far <= radius * radius {
                    c * q.volume()
                } else if near >= radius * radius {
                    0.0
                } else {
                    let step = if dim == 1 { 0.01 } else { 0.05 } * q.side.max(1.0);
                    let rule = cube_rule(q, step);
                    let inside = rule
                        .nodes
                        .iter()
                        .filter(|p| p.norm_sq() < radius * radius)
                        .count();
                    c * rule.weight * inside as f64
                }
            }
        }
    }
}

/// Uniform bucketing of atoms by unit cells, for fast ball and cube queries.
#[derive(Debug, Clone, Default)]
struct AtomIndex {
    cells: HashMap<[i32; 4], Vec<usize>>,
}

fn cell_of(p: &Point) -> [i32; 4] {
    let mut k = [0i32; 4];
    for (i, x) in p.coords().iter().enumerate() {
        k[i] = x.floor() as i32;
    }
    k
}

impl AtomIndex {
    fn build(atoms: &[Atom]) -> Self {
        let mut cells: HashMap<[i32; 4], Vec<usize>> = HashMap::new();
        for (i, a) in atoms.iter().enumerate() {
            cells.entry(cell_of(&a.location)).or_default().push(i);
        }
        AtomIndex { cells }
    }

    /// Indices of atoms in cells meeting the box `center ± reach`.
    fn visit(&self, center: &Point, reach: f64, mut f: impl FnMut(usize)) {
        let d = center.coords().len();
        let mut lo = [0i32; 4];
        let mut hi = [0i32; 4];
        for i in 0..d {
            lo[i] = (center.coord(i) - reach).floor() as i32;
            hi[i] = (center.coord(i) + reach).floor() as i32;
        }
        let cells: usize = (0..d).map(|i| (hi[i] - lo[i] + 1) as usize).product();
        if cells > 4 * self.cells.len() {
            for v in self.cells.values() {
                v.iter().for_each(|&i| f(i));
            }
            return;
        }
        let mut k = lo;
        loop {
            if let Some(v) = self.cells.get(&k) {
                v.iter().for_each(|&i| f(i));
            }
            let mut axis = d;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                if k[axis] < hi[axis] {
                    k[axis] += 1;
                    break;
                }
                k[axis] = lo[axis];
            }
        }
    }
}

/// Unscaled density masses of quadrature-evaluated balls, keyed by center and radius bits.
type BallCache = Arc<RwLock<HashMap<([u64; 4], u64), f64>>>;

/// `μ = λ·(Σ mᵢ δ_{uᵢ} + g·dv)`.
///
/// Clones (including [`Measure::scaled`]) share the cache of density ball masses.
#[derive(Debug, Clone)]
pub struct Measure {
    dim: usize,
    atoms: Vec<Atom>,
    density: Option<Density>,
    factor: f64,
    index: AtomIndex,
    ball_cache: BallCache,
}

impl PartialEq for Measure {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.atoms == other.atoms
            && self.density == other.density
            && self.factor == other.factor
    }
}

impl Measure {
    pub fn new(dim: usize, atoms: Vec<Atom>, density: Option<Density>) -> Result<Self> {
        check_dim(dim)?;
        for a in &atoms {
            a.location.check_dim(dim)?;
            if !(a.mass > 0.0 && a.mass.is_finite()) {
                return Err(Error::invalid(format!(
                    "atom at {} has mass {}; masses must be positive",
                    a.location, a.mass
                )));
            }
        }
        if let Some(d) = &density {
            d.validate()?;
        }
        let index = AtomIndex::build(&atoms);
        Ok(Measure {
            dim,
            atoms,
            density,
            factor: 1.0,
            index,
            ball_cache: Arc::default(),
        })
    }

    pub fn zero(dim: usize) -> Self {
        Measure::new(dim, Vec::new(), None).expect("empty measure is valid")
    }

    pub fn dirac(location: Point, mass: f64) -> Result<Self> {
        Measure::new(location.dim(), vec![Atom { location, mass }], None)
    }

    pub fn lebesgue(dim: usize) -> Self {
        Measure::new(dim, Vec::new(), Some(Density::Constant { c: 1.0 })).expect("valid")
    }

    pub fn with_density(dim: usize, density: Density) -> Result<Self> {
        Measure::new(dim, Vec::new(), Some(density))
    }

    /// `count` atoms uniform in `B_radius(0)` with masses uniform in `[lo, hi)`.
    pub fn random_cloud(
        dim: usize,
        count: usize,
        radius: f64,
        masses: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        check_dim(dim)?;
        if !(radius > 0.0) || !(masses.0 > 0.0 && masses.1 >= masses.0) {
            return Err(Error::invalid(
                "random cloud needs radius > 0 and 0 < lo ≤ hi",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut atoms = Vec::with_capacity(count);
        while atoms.len() < count {
            let mut c = [0.0; 4];
            for x in c.iter_mut().take(2 * dim) {
                *x = rng.random_range(-radius..radius);
            }
            let location = Point::from_coords(&c[..2 * dim])?;
            if location.norm() >= radius {
                continue;
            }
            let mass = if masses.1 > masses.0 {
                rng.random_range(masses.0..masses.1)
            } else {
                masses.0
            };
            atoms.push(Atom { location, mass });
        }
        Measure::new(dim, atoms, None)
    }

    /// Atoms on `ℤ²ⁿ ∩ B̄_cutoff` with masses `m(ν)`.
    pub fn lattice(dim: usize, cutoff: f64, mass: impl Fn(&Point) -> f64) -> Result<Self> {
        let atoms = lattice_points(1.0, cutoff, dim)?
            .into_iter()
            .map(|location| Atom {
                location,
                mass: mass(&location),
            })
            .collect();
        Measure::new(dim, atoms, None)
    }

    /// `m_ν = e^{−σ|ν|²}` on `|ν| ≤ cutoff`.
    pub fn lattice_gaussian(dim: usize, sigma: f64, cutoff: f64) -> Result<Self> {
        Measure::lattice(dim, cutoff, |p| (-sigma * p.norm_sq()).exp())
    }

    /// `m_ν = (1+|ν|)^{−τ}` on `|ν| ≤ cutoff`.
    pub fn lattice_power(dim: usize, tau: f64, cutoff: f64) -> Result<Self> {
        Measure::lattice(dim, cutoff, |p| (1.0 + p.norm()).powf(-tau))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    /// Overall multiplicative factor λ.
    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.density.is_none()
    }

    /// `λ·μ`, stored as a factor so that masses scale exactly.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "measure scale must be positive, got {lambda}"
            )));
        }
        let mut out = self.clone();
        out.factor *= lambda;
        Ok(out)
    }

    /// The measure with one more atom.
    pub fn with_atom(&self, atom: Atom) -> Result<Self> {
        let mut atoms = self.atoms.clone();
        atoms.push(atom);
        let mut out = Measure::new(self.dim, atoms, self.density)?;
        out.factor = self.factor;
        Ok(out)
    }

    /// Radius of a ball about the origin carrying all of μ (`∞` if none).
    pub fn support_radius(&self) -> f64 {
        let atoms = self
            .atoms
            .iter()
            .map(|a| a.location.norm())
            .fold(0.0, f64::max);
        match &self.density {
            Some(d) => atoms.max(d.support_radius()),
            None => atoms,
        }
    }

    /// Density value `λ·g(z)` (zero without a density).
    pub fn density_at(&self, z: &Point) -> f64 {
        self.density
            .as_ref()
            .map_or(0.0, |d| self.factor * d.eval(z))
    }

    fn atoms_where(&self, center: &Point, reach: f64, keep: impl Fn(&Point) -> bool) -> f64 {
        let mut idx = Vec::new();
        self.index.visit(center, reach, |i| {
            if keep(&self.atoms[i].location) {
                idx.push(i);
            }
        });
        // fixed summation order regardless of bucketing
        idx.sort_unstable();
        idx.iter().map(|&i| self.atoms[i].mass).sum()
    }

    /// Unscaled atom mass inside the open ball.
    fn base_atoms_in_ball(&self, b: &Ball) -> f64 {
        self.atoms_where(&b.center, b.radius, |p| b.contains(p))
    }

    fn cached_ball_mass(&self, d: &Density, b: &Ball) -> f64 {
        let mut c = [0u64; 4];
        for (k, x) in c.iter_mut().zip(b.center.coords()) {
            *k = x.to_bits();
        }
        let key = (c, b.radius.to_bits());
        if let Some(v) = self
            .ball_cache
            .read()
            .expect("mass cache poisoned")
            .get(&key)
        {
            return *v;
        }
        let v = d.ball_mass(b);
        self.ball_cache
            .write()
            .expect("mass cache poisoned")
            .insert(key, v);
        v
    }

    /// `μ(B)` for the open ball `B`.
    pub fn ball_mass(&self, b: &Ball) -> Result<f64> {
        b.center.check_dim(self.dim)?;
        let mut m = self.base_atoms_in_ball(b);
        if let Some(d) = &self.density {
            let v = match d {
                Density::Gaussian { .. } => self.cached_ball_mass(d, b),
                _ => d.ball_mass(b),
            };
            if !v.is_finite() {
                return Err(Error::domain(b.center, v, "density mass on ball"));
            }
            m += v;
        }
        Ok(self.factor * m)
    }

    /// `μ(Q)` for the half-open cube `Q`.
    pub fn cube_mass(&self, q: &Cube) -> Result<f64> {
        q.center.check_dim(self.dim)?;
        let reach = q.side / 2.0 * (2.0 * self.dim as f64).sqrt();
        let mut m = self.atoms_where(&q.center, reach, |p| q.contains(p));
        if let Some(d) = &self.density {
            let v = d.cube_mass(q);
            if !v.is_finite() {
                return Err(Error::domain(q.center, v, "density mass on cube"));
            }
            m += v;
        }
        Ok(self.factor * m)
    }

    /// Short family label used in reports.
    pub fn label(&self) -> &'static str {
        match (self.atoms.is_empty(), &self.density) {
            (true, None) => "zero",
            (false, None) => "atomic",
            (true, Some(Density::Constant { .. })) => "lebesgue",
            (true, Some(Density::Gaussian { .. })) => "gaussian-density",
            (true, Some(Density::BallIndicator { .. })) => "ball-density",
            (false, Some(_)) => "mixed",
        }
    }
}
