//! Local quadrature rules on cubes and balls.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::point::{Ball, Cube, Point, MAX_DIM};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_order and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

/// Product Gauss rule on the unit ball of ℂⁿ (polar in each complex coordinate).
#[derive(Debug, Clone)]
pub struct UnitBallRule {
    pub offsets: Vec<Point>,
    pub weights: Vec<f64>,
}

impl UnitBallRule {
    fn build(dim: usize) -> Self {
        let mut offsets = Vec::new();
        let mut weights = Vec::new();
        match dim {
            1 => {
                let (x, w) = gauss_legendre(16);
                let m = 48;
                for (xi, wi) in x.iter().zip(&w) {
                    let rho = 0.5 * (xi + 1.0);
                    let wr = 0.5 * wi * rho;
                    for k in 0..m {
                        let th = 2.0 * PI * k as f64 / m as f64;
                        offsets.push(Point::c1(rho * th.cos(), rho * th.sin()));
                        weights.push(wr * 2.0 * PI / m as f64);
                    }
                }
            }
            _ => {
                // z = (ρ√(1−s) e^{iθ₁}, ρ√s e^{iθ₂}); dv = ½ ρ³ dρ ds dθ₁ dθ₂
                let (xr, wr) = gauss_legendre(10);
                let (xs, ws) = gauss_legendre(6);
                let m = 16;
                let dth = 2.0 * PI / m as f64;
                for (xi, wi) in xr.iter().zip(&wr) {
                    let rho = 0.5 * (xi + 1.0);
                    for (si, wsi) in xs.iter().zip(&ws) {
                        let s = 0.5 * (si + 1.0);
                        let (r1, r2) = (rho * (1.0 - s).sqrt(), rho * s.sqrt());
                        let w = 0.5 * wi * 0.5 * wsi * 0.5 * rho.powi(3) * dth * dth;
                        for a in 0..m {
                            let t1 = dth * a as f64;
                            for b in 0..m {
                                let t2 = dth * b as f64;
                                let p = Point::from_coords(&[
                                    r1 * t1.cos(),
                                    r1 * t1.sin(),
                                    r2 * t2.cos(),
                                    r2 * t2.sin(),
                                ])
                                .expect("four finite coordinates");
                                offsets.push(p);
                                weights.push(w);
                            }
                        }
                    }
                }
            }
        }
        UnitBallRule { offsets, weights }
    }

    /// Nodes and weights mapped onto `ball`.
    pub fn map<'a>(&'a self, ball: &'a Ball) -> impl Iterator<Item = (Point, f64)> + 'a {
        let scale = ball.radius.powi(2 * ball.center.dim() as i32);
        self.offsets
            .iter()
            .zip(&self.weights)
            .map(move |(o, w)| (ball.center + o.scale(ball.radius), w * scale))
    }
}

/// Shared polar rule for the unit ball of ℂⁿ.
pub fn ball_rule(dim: usize) -> &'static UnitBallRule {
    static RULES: [OnceLock<UnitBallRule>; MAX_DIM] = [OnceLock::new(), OnceLock::new()];
    RULES[dim - 1].get_or_init(|| UnitBallRule::build(dim))
}

/// Midpoint sub-grid of a cube with step at most `max_step`.
#[derive(Debug, Clone)]
pub struct CubeRule {
    pub nodes: Vec<Point>,
    pub weight: f64,
}

fn axis_points(cube: &Cube, max_step: f64, closed: bool) -> (Vec<f64>, f64) {
    let m = (cube.side / max_step - 1e-9).ceil().max(1.0) as usize;
    let h = cube.side / m as f64;
    let pts = if closed {
        (0..=m).map(|k| k as f64 * h - cube.side / 2.0).collect()
    } else {
        (0..m)
            .map(|k| (k as f64 + 0.5) * h - cube.side / 2.0)
            .collect()
    };
    (pts, h)
}

fn tensor(center: &Point, axis: &[f64]) -> Vec<Point> {
    let d = 2 * center.dim();
    let m = axis.len();
    let total = m.pow(d as u32);
    let mut out = Vec::with_capacity(total);
    let base = center.coords();
    for mut idx in 0..total {
        let mut c = [0.0; 2 * MAX_DIM];
        for i in (0..d).rev() {
            c[i] = base[i] + axis[idx % m];
            idx /= m;
        }
        out.push(Point::from_coords(&c[..d]).expect("finite coordinates"));
    }
    out
}

pub fn cube_rule(cube: &Cube, max_step: f64) -> CubeRule {
    let (axis, h) = axis_points(cube, max_step, false);
    CubeRule {
        nodes: tensor(&cube.center, &axis),
        weight: h.powi(2 * cube.center.dim() as i32),
    }
}

/// Vertices of the sub-grid, faces included; used for infima of continuous weights.
pub fn cube_vertex_grid(cube: &Cube, max_step: f64) -> Vec<Point> {
    let (axis, _) = axis_points(cube, max_step, true);
    tensor(&cube.center, &axis)
}

/// Tensor Gauss–Legendre panels of unit-order width on a cube; exact for
/// smooth integrands far beyond the midpoint rule.
pub fn cube_gauss_rule(cube: &Cube, order: usize) -> (Vec<Point>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let panels = cube.side.ceil().max(1.0) as usize;
    let ph = cube.side / panels as f64;
    let lo = -cube.side / 2.0;
    let mut axis = Vec::with_capacity(panels * order);
    let mut aw = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let mid = lo + (k as f64 + 0.5) * ph;
        for (xi, wi) in x.iter().zip(&w) {
            axis.push(mid + 0.5 * ph * xi);
            aw.push(0.5 * ph * wi);
        }
    }
    let nodes = tensor(&cube.center, &axis);
    let d = 2 * cube.center.dim();
    let m = axis.len();
    let weights = (0..nodes.len())
        .map(|mut idx| {
            let mut prod = 1.0;
            for _ in 0..d {
                prod *= aw[idx % m];
                idx /= m;
            }
            prod
        })
        .collect();
    (nodes, weights)
}
