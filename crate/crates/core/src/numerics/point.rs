use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest complex dimension supported by the fixed-size point storage.
pub const MAX_DIM: usize = 2;

const MAX_COORDS: usize = 2 * MAX_DIM;

/// A point of ℂⁿ stored as 2n real coordinates, `(Re z₁, Im z₁, Re z₂, Im z₂, …)`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point {
    coords: [f64; MAX_COORDS],
    dim: usize,
}

impl Point {
    /// The origin of ℂⁿ.
    pub fn origin(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        Point {
            coords: [0.0; MAX_COORDS],
            dim,
        }
    }

    /// Builds a point from 2n real coordinates.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() % 2 != 0 || coords.len() > MAX_COORDS {
            return Err(Error::invalid(format!(
                "a point needs 2n real coordinates with 1 <= n <= {MAX_DIM}, got {}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate {bad}")));
        }
        let mut p = Point::origin(coords.len() / 2);
        p.coords[..coords.len()].copy_from_slice(coords);
        Ok(p)
    }

    /// Builds a point from its complex coordinates.
    pub fn from_complex(z: &[Complex64]) -> Result<Self> {
        let coords: Vec<f64> = z.iter().flat_map(|c| [c.re, c.im]).collect();
        Point::from_coords(&coords)
    }

    /// Convenience constructor for a point of ℂ¹.
    pub fn c1(re: f64, im: f64) -> Self {
        let mut p = Point::origin(1);
        p.coords[0] = re;
        p.coords[1] = im;
        p
    }

    pub(crate) fn from_array(coords: [f64; MAX_COORDS], dim: usize) -> Self {
        Point { coords, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords[..2 * self.dim]
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.coords()[i]
    }

    /// The j-th complex coordinate.
    pub fn complex(&self, j: usize) -> Complex64 {
        Complex64::new(self.coords[2 * j], self.coords[2 * j + 1])
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords().iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn dist(&self, other: &Point) -> f64 {
        self.dist_sq(other).sqrt()
    }

    /// Real Euclidean dot product of the underlying ℝ²ⁿ vectors.
    pub fn dot(&self, other: &Point) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Hermitian product ⟨z, u⟩ = Σ zⱼ·conj(uⱼ).
    pub fn inner(&self, u: &Point) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..self.dim {
            let (x, y) = (self.coords[2 * j], self.coords[2 * j + 1]);
            let (a, b) = (u.coords[2 * j], u.coords[2 * j + 1]);
            acc.re += x * a + y * b;
            acc.im += y * a - x * b;
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Point {
        let mut out = *self;
        out.coords.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim == dim {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "dimension mismatch: point in C^{} used where C^{dim} expected",
                self.dim
            )))
        }
    }
}

impl Add for Point {
    type Output = Point;

    fn add(self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut out = self;
        for (a, b) in out.coords.iter_mut().zip(rhs.coords) {
            *a += b;
        }
        out
    }
}

impl Sub for Point {
    type Output = Point;

    fn sub(self, rhs: Point) -> Point {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut out = self;
        for (a, b) in out.coords.iter_mut().zip(rhs.coords) {
            *a -= b;
        }
        out
    }
}

impl Mul<f64> for Point {
    type Output = Point;

    fn mul(self, s: f64) -> Point {
        self.scale(s)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::from_coords(&v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.coords().to_vec()
    }
}

/// Half-open cube Π [cᵢ − side/2, cᵢ + side/2) in ℝ²ⁿ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cube {
    pub center: Point,
    pub side: f64,
}

impl Cube {
    pub fn new(center: Point, side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::invalid(format!(
                "cube side must be positive, got {side}"
            )));
        }
        Ok(Cube { center, side })
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(2 * self.center.dim() as i32)
    }

    /// Low faces are included, high faces excluded.
    pub fn contains(&self, p: &Point) -> bool {
        let h = self.side / 2.0;
        self.center
            .coords()
            .iter()
            .zip(p.coords())
            .all(|(c, x)| *x >= c - h && *x < c + h)
    }
}

/// Open Euclidean ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!(
                "ball radius must be positive, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, p: &Point) -> bool {
        self.center.dist_sq(p) < self.radius * self.radius
    }

    /// Lebesgue volume π^n r^{2n} / n!.
    pub fn volume(&self) -> f64 {
        ball_volume(self.center.dim(), self.radius)
    }
}

pub fn ball_volume(dim: usize, radius: f64) -> f64 {
    let n = dim as i32;
    let factorial: f64 = (1..=dim).map(|k| k as f64).product();
    std::f64::consts::PI.powi(n) * radius.powi(2 * n) / factorial
}
