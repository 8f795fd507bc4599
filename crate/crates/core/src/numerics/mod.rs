//! Geometry of ℂⁿ ≅ ℝ²ⁿ, lattice enumeration and truncated quadrature.
//!
//! All integrals over ℂⁿ are realised by the midpoint rule on the cubes
//! `Q_h(ν)`, `ν ∈ hℤ²ⁿ`, truncated to `|ν| ≤ R`. For integrands with
//! Gaussian decay the truncation error is controlled by [`gaussian_tail`],
//! and the midpoint rule converges spectrally in `h`.

mod par;
mod point;
mod rules;

pub use par::{par_sum, try_par_map, try_par_sum};
pub use point::{ball_volume, Ball, Cube, Point, MAX_DIM};
pub use rules::{
    ball_rule, cube_gauss_rule, cube_rule, cube_vertex_grid, gauss_legendre, CubeRule, UnitBallRule,
};

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Default midpoint step for the given complex dimension.
pub fn default_step(dim: usize) -> f64 {
    if dim <= 1 {
        0.05
    } else {
        0.15
    }
}

/// Relative truncation tolerance used when choosing grid radii.
pub const TAIL_TOLERANCE: f64 = 1e-8;

/// Integer multi-indices `k ∈ ℤ²ⁿ` with `|k| ≤ bound`, lexicographic order.
pub fn lattice_indices(bound: f64, dim: usize) -> Vec<[i32; 2 * MAX_DIM]> {
    let d = 2 * dim;
    let kmax = (bound + 1e-9).floor().max(0.0) as i32;
    let limit = bound * bound * (1.0 + 1e-12) + 1e-12;
    let mut out = Vec::new();
    let mut k = [0i32; 2 * MAX_DIM];
    k[..d].iter_mut().for_each(|c| *c = -kmax);
    loop {
        let sq: i64 = k[..d].iter().map(|&c| (c as i64) * (c as i64)).sum();
        if (sq as f64) <= limit {
            out.push(k);
        }
        // odometer increment, last coordinate fastest
        let mut axis = d;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            if k[axis] < kmax {
                k[axis] += 1;
                break;
            }
            k[axis] = -kmax;
        }
    }
}

/// The points `ν ∈ spacing·ℤ²ⁿ` with `|ν| ≤ radius`, in lexicographic order.
pub fn lattice_points(spacing: f64, radius: f64, dim: usize) -> Result<Vec<Point>> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(Error::invalid(format!(
            "lattice spacing must be positive, got {spacing}"
        )));
    }
    if !(radius >= 0.0) {
        return Err(Error::invalid(format!(
            "lattice radius must be non-negative, got {radius}"
        )));
    }
    check_dim(dim)?;
    Ok(lattice_indices(radius / spacing, dim)
        .into_iter()
        .map(|k| index_to_point(&k, spacing, dim))
        .collect())
}

pub(crate) fn index_to_point(k: &[i32; 2 * MAX_DIM], spacing: f64, dim: usize) -> Point {
    let mut c = [0.0; 2 * MAX_DIM];
    for i in 0..2 * dim {
        c[i] = k[i] as f64 * spacing;
    }
    Point::from_array(c, dim)
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "complex dimension must be in 1..={MAX_DIM}, got {dim}"
        )))
    }
}

/// Midpoint grid over the lattice cubes `Q_h(ν)`, `ν ∈ hℤ²ⁿ`, `|ν| ≤ R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureGrid {
    step: f64,
    radius: f64,
    dim: usize,
}

impl QuadratureGrid {
    pub fn new(step: f64, radius: f64, dim: usize) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::invalid(format!(
                "grid step must be positive, got {step}"
            )));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!(
                "grid radius must be positive, got {radius}"
            )));
        }
        check_dim(dim)?;
        Ok(QuadratureGrid { step, radius, dim })
    }

    /// Grid whose radius covers a Gaussian `e^{−α_eff|z−c|²}` with `|c| ≤ extent`
    /// up to a relative tail of [`TAIL_TOLERANCE`].
    pub fn covering(step: f64, alpha_eff: f64, extent: f64, dim: usize) -> Result<Self> {
        let r0 = tail_radius(alpha_eff, dim, TAIL_TOLERANCE)?;
        QuadratureGrid::new(step, extent.max(0.0) + r0, dim)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Volume `h^{2n}` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.step.powi(2 * self.dim as i32)
    }

    /// Largest integer index along any axis.
    pub fn half_width(&self) -> i32 {
        (self.radius / self.step + 1e-9).floor() as i32
    }

    pub fn indices(&self) -> Vec<[i32; 2 * MAX_DIM]> {
        lattice_indices(self.radius / self.step, self.dim)
    }

    pub fn nodes(&self) -> Vec<Point> {
        self.indices()
            .iter()
            .map(|k| index_to_point(k, self.step, self.dim))
            .collect()
    }

    pub fn node_count(&self) -> usize {
        self.indices().len()
    }

    /// Same grid with halved step.
    pub fn refined(&self) -> Self {
        QuadratureGrid {
            step: self.step / 2.0,
            ..*self
        }
    }

    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        QuadratureGrid::new(self.step, radius, self.dim)
    }
}

/// Value of a truncated integral together with the share carried by the
/// outermost unit-width shell of the grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncated {
    pub value: f64,
    pub shell: f64,
}

impl Truncated {
    /// Fraction of the total contributed by the outer shell.
    pub fn shell_fraction(&self) -> f64 {
        if self.value == 0.0 {
            0.0
        } else {
            (self.shell / self.value).abs()
        }
    }

    /// Fails with [`Error::Diverged`] when the outer shell carries more than
    /// `tol` of the total.
    pub fn converged(self, tol: f64, what: &str) -> Result<f64> {
        if self.shell_fraction() > tol {
            Err(Error::Diverged(format!(
                "{what}: outer shell carries {:.3e} of the truncated value {:.6e}",
                self.shell_fraction(),
                self.value
            )))
        } else {
            Ok(self.value)
        }
    }
}

/// Midpoint rule `Σ_nodes f(node)·h^{2n}`.
pub fn integrate<F>(f: F, grid: &QuadratureGrid) -> Result<f64>
where
    F: Fn(&Point) -> f64 + Sync,
{
    integrate_truncated(f, grid).map(|t| t.value)
}

/// Midpoint rule that also reports the outer-shell contribution (nodes with
/// `|ν| > R − 1`).
pub fn integrate_truncated<F>(f: F, grid: &QuadratureGrid) -> Result<Truncated>
where
    F: Fn(&Point) -> f64 + Sync,
{
    let nodes = grid.nodes();
    let cell = grid.cell_volume();
    let inner_sq = (grid.radius - 1.0).max(0.0).powi(2);
    let vals = try_par_map(nodes.len(), |i| {
        let v = f(&nodes[i]);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(nodes[i], v, "integrand"))
        }
    })?;
    let value = vals.iter().sum::<f64>() * cell;
    let shell = nodes
        .iter()
        .zip(&vals)
        .filter(|(p, _)| p.norm_sq() > inner_sq)
        .map(|(_, v)| v)
        .sum::<f64>()
        * cell;
    Ok(Truncated { value, shell })
}

/// Rigorous bound for `∫_{|z|>R} e^{−α|z|²} dv(z)` over ℂⁿ.
///
/// The value is exact: `(π/α)ⁿ e^{−αR²} Σ_{k<n} (αR²)ᵏ/k!`.
pub fn gaussian_tail(alpha: f64, radius: f64, dim: usize) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if !(radius >= 0.0) {
        return Err(Error::invalid(format!(
            "radius must be non-negative, got {radius}"
        )));
    }
    check_dim(dim)?;
    let x = alpha * radius * radius;
    let mut term = 1.0;
    let mut series = 0.0;
    for k in 0..dim {
        if k > 0 {
            term *= x / k as f64;
        }
        series += term;
    }
    Ok((PI / alpha).powi(dim as i32) * (-x).exp() * series)
}

/// Smallest radius `R` with `gaussian_tail(α, R) < rel_tol·(π/α)ⁿ`.
pub fn tail_radius(alpha: f64, dim: usize, rel_tol: f64) -> Result<f64> {
    let total = gaussian_tail(alpha, 0.0, dim)?;
    let target = rel_tol * total;
    let (mut lo, mut hi) = (0.0_f64, 1.0 / alpha.sqrt());
    while gaussian_tail(alpha, hi, dim)? >= target {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if gaussian_tail(alpha, mid, dim)? >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn brute_count(spacing: f64, radius: f64) -> usize {
        // independent: scan a generous integer box in ℤ²
        let k = (radius / spacing).ceil() as i64 + 2;
        let mut count = 0;
        for a in -k..=k {
            for b in -k..=k {
                let (x, y) = (a as f64 * spacing, b as f64 * spacing);
                if x * x + y * y <= radius * radius + 1e-12 {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn lattice_origin_only() {
        let pts = lattice_points(1.0, 0.0, 1).unwrap();
        assert_eq!(pts, vec![Point::origin(1)]);
    }

    #[test]
    fn lattice_three_by_three() {
        let pts = lattice_points(1.0, 1.5, 1).unwrap();
        assert_eq!(pts.len(), 9);
        assert_eq!(pts.len(), brute_count(1.0, 1.5));
        assert_eq!(pts[0], Point::c1(-1.0, -1.0));
        assert_eq!(pts[8], Point::c1(1.0, 1.0));
    }

    #[test]
    fn lattice_half_spacing_matches_brute_force() {
        // points (i/2, j/2) with i² + j² ≤ 4
        let expected = brute_count(0.5, 1.0);
        assert_eq!(expected, 13);
        assert_eq!(lattice_points(0.5, 1.0, 1).unwrap().len(), expected);
    }

    #[test]
    fn lattice_rejects_bad_spacing() {
        assert!(matches!(
            lattice_points(0.0, 1.0, 1),
            Err(Error::InvalidArgument(_))
        ));
        assert!(lattice_points(-1.0, 1.0, 1).is_err());
    }

    #[test]
    fn lattice_is_lexicographic() {
        let pts = lattice_points(0.5, 2.0, 1).unwrap();
        for w in pts.windows(2) {
            let (a, b) = (w[0].coords(), w[1].coords());
            assert!(a.partial_cmp(b) == Some(std::cmp::Ordering::Less));
        }
    }

    #[test]
    fn gaussian_integral_n1() {
        let grid = QuadratureGrid::new(0.05, 6.0, 1).unwrap();
        let v = integrate(|z| (-z.norm_sq()).exp(), &grid).unwrap();
        assert_relative_eq!(v, PI, max_relative = 1e-6);
    }

    #[test]
    fn zero_integrand() {
        let grid = QuadratureGrid::new(0.1, 3.0, 1).unwrap();
        assert_eq!(integrate(|_| 0.0, &grid).unwrap(), 0.0);
    }

    #[test]
    fn disk_indicator_area() {
        let grid = QuadratureGrid::new(0.01, 2.0, 1).unwrap();
        let v = integrate(|z| if z.norm_sq() < 1.0 { 1.0 } else { 0.0 }, &grid).unwrap();
        assert_relative_eq!(v, PI, max_relative = 1e-2);
    }

    #[test]
    fn non_finite_integrand_reports_node() {
        let grid = QuadratureGrid::new(0.5, 2.0, 1).unwrap();
        let err = integrate(|z| if z.coord(0) > 0.9 { f64::NAN } else { 1.0 }, &grid).unwrap_err();
        match err {
            Error::NumericalDomain { point, .. } => assert!(point.coord(0) > 0.9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gaussian_tail_values() {
        assert_relative_eq!(
            gaussian_tail(1.0, 3.0, 1).unwrap(),
            PI * (-9.0f64).exp(),
            max_relative = 1e-14
        );
        assert_relative_eq!(gaussian_tail(1.0, 1e-300, 1).unwrap(), PI);
        assert_relative_eq!(
            gaussian_tail(2.0, 4.0, 1).unwrap(),
            PI / 2.0 * (-32.0f64).exp(),
            max_relative = 1e-14
        );
        assert!((gaussian_tail(1.0, 3.0, 1).unwrap() - 3.879e-4).abs() < 1e-6);
    }

    #[test]
    fn gaussian_tail_bounds_quadrature_tail_n2() {
        // ∫_{|z|>R} e^{-|z|²} over ℂ² by radial integration: 2π² ∫_R^∞ r³ e^{-r²} dr
        let r: f64 = 1.5;
        let exact = PI * PI * (-r * r).exp() * (1.0 + r * r);
        assert_relative_eq!(
            gaussian_tail(1.0, r, 2).unwrap(),
            exact,
            max_relative = 1e-14
        );
    }

    #[test]
    fn covering_grid_radius_meets_tail_rule() {
        let g = QuadratureGrid::covering(0.05, 1.0, 0.0, 1).unwrap();
        let tail = gaussian_tail(1.0, g.radius(), 1).unwrap();
        assert!(tail < TAIL_TOLERANCE * PI);
        assert!(g.radius() < 5.0);
    }
}
