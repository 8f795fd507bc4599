//! Exact volumes of ball intersections in ℝ² and ℝ⁴.

use std::f64::consts::PI;

use crate::numerics::ball_volume;

/// Volume of `{x ∈ B_r(0) : x₁ > a}` in ℝ^{2·dim}.
fn cap(dim: usize, r: f64, a: f64) -> f64 {
    let a = a.clamp(-r, r);
    let s = (r * r - a * a).max(0.0).sqrt();
    match dim {
        1 => r * r * (a / r).acos() - a * s,
        _ => {
            // (4π/3) ∫_a^r (r² − x²)^{3/2} dx
            let prim = |x: f64, sx: f64| {
                x / 8.0 * (5.0 * r * r - 2.0 * x * x) * sx + 3.0 * r.powi(4) / 8.0 * (x / r).asin()
            };
            4.0 * PI / 3.0 * (prim(r, 0.0) - prim(a, s))
        }
    }
}

/// `v(B_{r1}(x) ∩ B_{r2}(y))` with `|x − y| = d`.
pub(crate) fn lens_volume(dim: usize, r1: f64, r2: f64, d: f64) -> f64 {
    if d >= r1 + r2 {
        return 0.0;
    }
    if d <= (r1 - r2).abs() {
        return ball_volume(dim, r1.min(r2));
    }
    let a1 = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
    let a2 = d - a1;
    cap(dim, r1, a1) + cap(dim, r2, a2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn caps_split_the_ball() {
        for dim in 1..=2 {
            let v = ball_volume(dim, 1.3);
            assert_relative_eq!(cap(dim, 1.3, 0.0), v / 2.0, max_relative = 1e-14);
            assert_relative_eq!(cap(dim, 1.3, -1.3), v, max_relative = 1e-14);
            assert_relative_eq!(
                cap(dim, 1.3, 0.4) + cap(dim, 1.3, -0.4),
                v,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn lens_matches_brute_force() {
        // Monte-Carlo-free check: midpoint count on a fine grid in ℝ²
        let (r1, r2, d) = (1.0, 2.0, 2.2);
        let h = 0.002;
        let mut count = 0usize;
        let m = (3.5 / h) as i64;
        for i in -m..=m {
            for j in -m..=m {
                let (x, y) = ((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                if x * x + y * y < r1 * r1 && (x - d).powi(2) + y * y < r2 * r2 {
                    count += 1;
                }
            }
        }
        assert_relative_eq!(
            lens_volume(1, r1, r2, d),
            count as f64 * h * h,
            max_relative = 1e-3
        );
        assert_relative_eq!(
            lens_volume(2, 1.0, 1.0, 0.0),
            ball_volume(2, 1.0),
            max_relative = 1e-14
        );
        assert_eq!(lens_volume(2, 1.0, 1.0, 2.0), 0.0);
    }
}
