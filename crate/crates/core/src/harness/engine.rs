//! Batched evaluation of a whole test family against one measure.
//!
//! Members are real combinations of the normalized kernels `f_ν`, so every
//! kernel is evaluated once per node and members are formed by dot products.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FamilySpec;
use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::numerics::{
    ball_rule, lattice_points, try_par_map, Ball, Cube, Point, QuadratureGrid, MAX_DIM,
};
use crate::operators::{gaussian_batch, toeplitz_batch, MeasureSamples};
use crate::spaces::{normalized_kernel, EntireFunction, FockParams};
use crate::weights::Weight;

/// The operator whose norm the family probes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Operator {
    /// `S^{t,α,β}_μ : F^p_{α,w} → L^q(w dv)`.
    Berezin { t: f64, beta: f64 },
    /// `T^α_μ : F^p_{α,w} → F^q_{α,w}`.
    Toeplitz,
    /// `F^p_{α,w} ↪ L^q(e^{−qα|z|²/2} dμ)`.
    Embedding,
}

impl Operator {
    /// `(γ, η)` of the lattice weight `μ(Q)^γ / w(Q)^η` in the upper sum.
    pub(crate) fn lattice_exponents(self, p: f64, q: f64) -> (f64, f64) {
        match self {
            Operator::Berezin { t, .. } => (q / t, q / p - 1.0),
            Operator::Toeplitz => (q, q / p - 1.0),
            Operator::Embedding => (1.0, q / p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyEstimate {
    /// `max_f ‖Af‖/‖f‖` over the family: a lower bound for the operator norm.
    pub lower: f64,
    /// `max_f (C·RHS(f))^{1/q}/‖f‖` with the frozen constant `C`.
    pub upper: f64,
    /// `max_f LHS(f)/RHS(f)`, the smallest constant that makes the sandwich hold.
    pub observed_constant: f64,
    pub sandwich_holds: bool,
    pub members: usize,
    /// Index of the member attaining `lower`.
    pub best_member: usize,
    pub samples: usize,
    pub lattice_cells: usize,
    /// Largest share of a truncated norm integral coming from the outer unit shell.
    pub shell_fraction: f64,
}

pub(crate) struct Problem<'a> {
    pub mu: &'a Measure,
    pub w: &'a Weight,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub op: Operator,
    pub grid: &'a QuadratureGrid,
    pub family: FamilySpec,
    pub seed: u64,
}

/// `ν ∈ ℤ²ⁿ` with `max |ν_i| ≤ b`, lexicographic.
pub(crate) fn box_centers(dim: usize, b: u32) -> Vec<Point> {
    let d = 2 * dim;
    let b = b as i32;
    let side = (2 * b + 1) as usize;
    (0..side.pow(d as u32))
        .map(|mut idx| {
            let mut c = [0.0; 2 * MAX_DIM];
            for i in (0..d).rev() {
                c[i] = (idx % side) as f64 - b as f64;
                idx /= side;
            }
            Point::from_coords(&c[..d]).expect("finite lattice coordinates")
        })
        .collect()
}

/// Cells `Q_1(ν)` charged by μ, with the lattice weight of `op`.
pub(crate) fn lattice_cells(
    mu: &Measure,
    w: &Weight,
    radius: f64,
    weight_of: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<Vec<(Point, f64)>> {
    let nus = lattice_points(1.0, radius, mu.dim())?;
    let a = try_par_map(nus.len(), |i| {
        let q = Cube::new(nus[i], 1.0)?;
        let m = mu.cube_mass(&q)?;
        if m == 0.0 {
            return Ok(0.0);
        }
        let wq = w.mass_on_cube(&q)?;
        if !(wq > 0.0 && wq.is_finite()) {
            return Err(Error::domain(nus[i], wq, "weight mass of a lattice cube"));
        }
        Ok(weight_of(m, wq))
    })?;
    Ok(nus.into_iter().zip(a).filter(|(_, a)| *a > 0.0).collect())
}

fn lattice_weight(op: Operator, p: f64, q: f64) -> impl Fn(f64, f64) -> f64 + Sync {
    let (g, e) = op.lattice_exponents(p, q);
    move |m: f64, wq: f64| m.powf(g) / wq.powf(e)
}

fn combine(basis: &[Complex64], row: &[f64]) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, c) in basis.iter().zip(row) {
        if *c != 0.0 {
            acc += b * c;
        }
    }
    acc.norm()
}

fn damped_values(basis: &[EntireFunction], points: &[Point], alpha: f64) -> Result<Vec<Complex64>> {
    let k = basis.len();
    let rows = try_par_map(points.len(), |i| {
        basis
            .iter()
            .map(|f| f.eval_damped(&points[i], alpha))
            .collect::<Result<Vec<_>>>()
    })?;
    let mut out = Vec::with_capacity(points.len() * k);
    for r in rows {
        out.extend(r);
    }
    Ok(out)
}

pub(crate) fn estimate(prob: &Problem, constant: f64) -> Result<FamilyEstimate> {
    let (p, q, alpha) = (prob.p, prob.q, prob.alpha);
    let dim = prob.mu.dim();
    if prob.w.dim() != dim || prob.grid.dim() != dim {
        return Err(Error::invalid("measure, weight and grid dimensions differ"));
    }
    let fp = FockParams::new(p, alpha, prob.w.clone())?;
    let centers = box_centers(dim, prob.family.kernel_box);
    let basis = centers
        .iter()
        .map(|c| normalized_kernel(c, &fp))
        .collect::<Result<Vec<_>>>()?;
    let k = basis.len();

    let nodes = prob.grid.nodes();
    let cell = prob.grid.cell_volume();
    let wz: Vec<f64> = nodes.iter().map(|z| prob.w.eval(z)).collect();
    let inner_sq = (prob.grid.radius() - 1.0).max(0.0).powi(2);
    let at_nodes = damped_values(&basis, &nodes, alpha)?;

    let basis_norms: Vec<f64> = (0..k)
        .map(|j| {
            let s: f64 = (0..nodes.len())
                .map(|i| cell * wz[i] * at_nodes[i * k + j].norm().powf(p))
                .sum();
            s.powf(1.0 / p)
        })
        .collect();

    let radius = prob.grid.radius() - 2.0 * dim as f64;
    let cells = lattice_cells(prob.mu, prob.w, radius, lattice_weight(prob.op, p, q))?;

    // members: the kernels themselves, then Rademacher combinations
    let mut rows: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut r = vec![0.0; k];
            r[j] = 1.0;
            r
        })
        .collect();
    let support: Vec<usize> = (0..k)
        .filter(|&j| centers[j].norm() <= prob.family.rademacher_radius + 1e-9)
        .collect();
    if !support.is_empty() && prob.family.rademacher_draws > 0 {
        let mut coef = vec![1.0; k];
        if p > q {
            // extremal for Σ|c_ν|^q a_ν under ‖c‖_{ℓ^p} = 1: |c_ν| ∝ a_ν^{1/(p−q)}
            let a_of = |c: &Point| cells.iter().find(|(nu, _)| nu == c).map_or(0.0, |x| x.1);
            let a: Vec<f64> = support.iter().map(|&j| a_of(&centers[j])).collect();
            let top = a.iter().cloned().fold(0.0, f64::max);
            if top > 0.0 {
                for (&j, aj) in support.iter().zip(&a) {
                    coef[j] = (aj / top).powf(1.0 / (p - q));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(prob.seed);
        for _ in 0..prob.family.rademacher_draws {
            let mut r = vec![0.0; k];
            for &j in &support {
                let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                r[j] = s * coef[j] / basis_norms[j];
            }
            rows.push(r);
        }
    }
    let members = rows.len();

    let mut norm_shell = 0.0f64;
    let norms: Vec<f64> = rows
        .iter()
        .map(|row| {
            let (mut tot, mut shell) = (0.0, 0.0);
            for (i, z) in nodes.iter().enumerate() {
                let x = cell * wz[i] * combine(&at_nodes[i * k..(i + 1) * k], row).powf(p);
                tot += x;
                if z.norm_sq() > inner_sq {
                    shell += x;
                }
            }
            if tot > 0.0 {
                norm_shell = norm_shell.max(shell / tot);
            }
            tot.powf(1.0 / p)
        })
        .collect();

    // left-hand sides ‖A f‖^q
    let relevance_power = match prob.op {
        Operator::Berezin { t, .. } => t,
        Operator::Toeplitz => 1.0,
        Operator::Embedding => q,
    };
    let raw = MeasureSamples::new(prob.mu, prob.grid);
    let raw_basis = damped_values(&basis, &raw.points, alpha)?;
    let relevance: Vec<f64> = (0..raw.len())
        .map(|s| {
            raw_basis[s * k..(s + 1) * k]
                .iter()
                .map(|b| b.norm().powf(relevance_power))
                .fold(0.0, f64::max)
        })
        .collect();
    let samples = raw.prune(|s| relevance[s], 1e-15);
    let sample_basis = damped_values(&basis, &samples.points, alpha)?;
    let ns = samples.len();

    let mut target_shell = 0.0f64;
    let mut outer = |field: &dyn Fn(usize, usize) -> f64, j: usize| -> f64 {
        let (mut tot, mut shell) = (0.0, 0.0);
        for (i, z) in nodes.iter().enumerate() {
            let x = cell * wz[i] * field(i, j);
            tot += x;
            if z.norm_sq() > inner_sq {
                shell += x;
            }
        }
        if tot > 0.0 {
            target_shell = target_shell.max(shell / tot);
        }
        tot
    };
    let lhs: Vec<f64> = if ns == 0 {
        vec![0.0; members]
    } else {
        match prob.op {
            Operator::Berezin { t, beta } => {
                let mut vals = Vec::with_capacity(ns * members);
                for s in 0..ns {
                    let b = &sample_basis[s * k..(s + 1) * k];
                    vals.extend(rows.iter().map(|r| combine(b, r).powf(t)));
                }
                let field = gaussian_batch(&samples, &vals, members, beta, &nodes);
                let e = q / t;
                (0..members)
                    .map(|j| outer(&|i, j| field[i * members + j].powf(e), j))
                    .collect()
            }
            Operator::Toeplitz => {
                let field = toeplitz_batch(&samples, &sample_basis, k, alpha, &nodes);
                (0..members)
                    .map(|j| {
                        outer(
                            &|i, j| combine(&field[i * k..(i + 1) * k], &rows[j]).powf(q),
                            j,
                        )
                    })
                    .collect()
            }
            Operator::Embedding => (0..members)
                .map(|j| {
                    (0..ns)
                        .map(|s| {
                            samples.weights[s]
                                * combine(&sample_basis[s * k..(s + 1) * k], &rows[j]).powf(q)
                        })
                        .sum()
                })
                .collect(),
        }
    };

    // right-hand sides Σ_ν a_ν (∫_{B_{2n}(ν)} |f|^p e^{−pα|u|²/2} w dv)^{q/p}
    let rule = ball_rule(dim);
    let ball_radius = 2.0 * dim as f64;
    let per_cell = try_par_map(cells.len(), |c| {
        let (nu, a) = cells[c];
        let ball = Ball::new(nu, ball_radius)?;
        let mut acc = vec![0.0; members];
        let mut b = vec![Complex64::new(0.0, 0.0); k];
        for (u, rw) in rule.map(&ball) {
            for (slot, f) in b.iter_mut().zip(&basis) {
                *slot = f.eval_damped(&u, alpha)?;
            }
            let ww = rw * prob.w.eval(&u);
            for (j, r) in rows.iter().enumerate() {
                acc[j] += ww * combine(&b, r).powf(p);
            }
        }
        Ok(acc
            .into_iter()
            .map(|x| a * x.powf(q / p))
            .collect::<Vec<f64>>())
    })?;
    let mut rhs = vec![0.0; members];
    for row in &per_cell {
        for (r, x) in rhs.iter_mut().zip(row) {
            *r += x;
        }
    }

    let mut est = FamilyEstimate {
        lower: 0.0,
        upper: 0.0,
        observed_constant: 0.0,
        sandwich_holds: true,
        members,
        best_member: 0,
        samples: ns,
        lattice_cells: cells.len(),
        shell_fraction: norm_shell.max(target_shell),
    };
    for j in 0..members {
        if !(norms[j] > 0.0) {
            continue;
        }
        let lo = lhs[j].powf(1.0 / q) / norms[j];
        if lo > est.lower {
            est.lower = lo;
            est.best_member = j;
        }
        est.upper = est.upper.max((constant * rhs[j]).powf(1.0 / q) / norms[j]);
        if lhs[j] > 0.0 {
            let ratio = if rhs[j] > 0.0 {
                lhs[j] / rhs[j]
            } else {
                f64::INFINITY
            };
            est.observed_constant = est.observed_constant.max(ratio);
        }
        if lhs[j] > constant * rhs[j] * (1.0 + 1e-9) {
            est.sandwich_holds = false;
        }
    }
    Ok(est)
}
