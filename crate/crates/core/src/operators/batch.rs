//! Many functions against one measure: each kernel entry `k(z, u)` is
//! computed once and applied to every function.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::measures::Measure;
use crate::numerics::{Point, QuadratureGrid};

/// Points and weights standing in for `dμ`: atoms with their masses and
/// density nodes of a grid with weight `g(u)·h^{2n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSamples {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    /// Number of leading samples that are atoms.
    pub atom_count: usize,
}

impl MeasureSamples {
    pub fn new(mu: &Measure, grid: &QuadratureGrid) -> Self {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for a in mu.atoms() {
            points.push(a.location);
            weights.push(mu.factor() * a.mass);
        }
        let atom_count = points.len();
        if mu.density().is_some() {
            let cell = grid.cell_volume();
            for u in grid.nodes() {
                let g = mu.density_at(&u);
                if g > 0.0 {
                    points.push(u);
                    weights.push(g * cell);
                }
            }
        }
        MeasureSamples {
            points,
            weights,
            atom_count,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Drops density samples whose `relevance` is below `rel_tol` times the
    /// largest one; atoms are always kept.
    pub fn prune(&self, relevance: impl Fn(usize) -> f64, rel_tol: f64) -> Self {
        let rel: Vec<f64> = (0..self.len())
            .map(|i| self.weights[i] * relevance(i))
            .collect();
        let top = rel.iter().cloned().fold(0.0, f64::max);
        let mut out = MeasureSamples {
            points: Vec::new(),
            weights: Vec::new(),
            atom_count: self.atom_count,
        };
        for i in 0..self.len() {
            if i < self.atom_count || rel[i] >= rel_tol * top {
                out.points.push(self.points[i]);
                out.weights.push(self.weights[i]);
            }
        }
        out
    }
}

/// `out[i·K + k] = Σ_s w_s e^{−β|z_i − u_s|²/2} v[s·K + k]` for `K` functions.
pub fn gaussian_batch(
    samples: &MeasureSamples,
    values: &[f64],
    k: usize,
    beta: f64,
    targets: &[Point],
) -> Vec<f64> {
    assert_eq!(values.len(), samples.len() * k);
    let half = 0.5 * beta;
    let rows: Vec<Vec<f64>> = targets
        .par_iter()
        .map(|z| {
            let mut acc = vec![0.0; k];
            for (s, (u, w)) in samples.points.iter().zip(&samples.weights).enumerate() {
                let e = half * z.dist_sq(u);
                if e > 745.0 {
                    continue;
                }
                let kw = w * (-e).exp();
                let v = &values[s * k..(s + 1) * k];
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += kw * x;
                }
            }
            acc
        })
        .collect();
    rows.concat()
}

/// `out[i·K + k] = Σ_s w_s e^{−α|z_i−u_s|²/2 + iα Im⟨z_i,u_s⟩} v[s·K + k]`, the
/// damped Toeplitz kernel `e^{α⟨z,u⟩ − α|u|²/2 − α|z|²/2}`.
pub fn toeplitz_batch(
    samples: &MeasureSamples,
    values: &[Complex64],
    k: usize,
    alpha: f64,
    targets: &[Point],
) -> Vec<Complex64> {
    assert_eq!(values.len(), samples.len() * k);
    let half = 0.5 * alpha;
    let rows: Vec<Vec<Complex64>> = targets
        .par_iter()
        .map(|z| {
            let mut acc = vec![Complex64::new(0.0, 0.0); k];
            for (s, (u, w)) in samples.points.iter().zip(&samples.weights).enumerate() {
                let e = half * z.dist_sq(u);
                if e > 745.0 {
                    continue;
                }
                let phase = alpha * z.inner(u).im;
                let kw = Complex64::from_polar(w * (-e).exp(), phase);
                let v = &values[s * k..(s + 1) * k];
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += kw * x;
                }
            }
            acc
        })
        .collect();
    rows.concat()
}
