//! Restricted Muckenhoupt-type constants and lattice doubling diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Weight;
use crate::error::{Error, Result};
use crate::numerics::{default_step, lattice_points, Cube, Point};

/// Constants at or above this value count as infinite.
pub const MEMBERSHIP_SENTINEL: f64 = 1e6;

/// A supremum over sampled centers; `value` is `+∞` when some average overflowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassEstimate {
    pub value: f64,
    pub argmax: Option<Point>,
}

impl ClassEstimate {
    pub fn is_finite(&self) -> bool {
        self.value < MEMBERSHIP_SENTINEL
    }
}

fn sup_over<F>(centers: &[Point], f: F) -> Result<ClassEstimate>
where
    F: Fn(&Point) -> Result<f64> + Sync,
{
    if centers.is_empty() {
        return Err(Error::invalid("no centers to take the supremum over"));
    }
    let vals: Vec<Result<f64>> = centers.par_iter().map(&f).collect();
    let mut best = ClassEstimate {
        value: f64::NEG_INFINITY,
        argmax: None,
    };
    for (z, v) in centers.iter().zip(vals) {
        let v = match v {
            Ok(v) if v.is_finite() => v,
            Ok(_) | Err(Error::NumericalDomain { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        if v > best.value {
            best = ClassEstimate {
                value: v,
                argmax: Some(*z),
            };
        }
        if v == f64::INFINITY {
            break;
        }
    }
    Ok(best)
}

fn check_side(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "cube side r must be positive, got {r}"
        )))
    }
}

/// `sup_z (avg_{Q_r(z)} w)·(avg_{Q_r(z)} w^{−1/(p−1)})^{p−1}` over `centers`.
pub fn ap_restricted_constant(
    w: &Weight,
    p: f64,
    r: f64,
    centers: &[Point],
) -> Result<ClassEstimate> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("A^res_p needs 1 < p < ∞, got {p}")));
    }
    check_side(r)?;
    let gamma = -1.0 / (p - 1.0);
    sup_over(centers, |z| {
        let q = Cube::new(*z, r)?;
        let v = q.volume();
        let a = w.base_power_mass_on_cube(&q, 1.0)? / v;
        let b = w.base_power_mass_on_cube(&q, gamma)? / v;
        Ok(a * b.powf(p - 1.0))
    })
}

/// `sup_z w(Q_r(z)) / (v(Q_r(z))·inf_{Q_r(z)} w)`, the infimum read off a vertex grid.
pub fn a1_restricted_constant(w: &Weight, r: f64, centers: &[Point]) -> Result<ClassEstimate> {
    check_side(r)?;
    let step = default_step(w.dim());
    sup_over(centers, |z| {
        let q = Cube::new(*z, r)?;
        let m = w.base_power_mass_on_cube(&q, 1.0)?;
        let inf = w.base_inf_on_cube(&q, step)?;
        Ok(m / (q.volume() * inf))
    })
}

/// Lattice doubling constant `C1` and neighbour growth constant `C2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Doubling {
    pub c1: f64,
    pub c2: f64,
}

/// Pairs farther apart than this are skipped once the lattice is large.
const FULL_PAIR_LIMIT: usize = 4096;

/// `C1 = max w(Q_{3r}(ν))/w(Q_r(ν))` and
/// `C2 = max (w(Q_r(ν))/w(Q_r(ν′)))^{1/|ν−ν′|}` over `ν, ν′ ∈ rℤ²ⁿ`, `|ν| ≤ r_sup`.
pub fn doubling_and_growth(w: &Weight, r: f64, r_sup: f64) -> Result<Doubling> {
    check_side(r)?;
    if !(r_sup > 0.0) {
        return Err(Error::invalid(format!(
            "R_sup must be positive, got {r_sup}"
        )));
    }
    let centers = lattice_points(r, r_sup, w.dim())?;
    let masses: Vec<(f64, f64)> = centers
        .par_iter()
        .map(|z| {
            let small = w.base_power_mass_on_cube(&Cube::new(*z, r)?, 1.0)?;
            let big = w.base_power_mass_on_cube(&Cube::new(*z, 3.0 * r)?, 1.0)?;
            Ok((small.ln(), big.ln()))
        })
        .collect::<Result<_>>()?;
    let c1 = masses
        .iter()
        .map(|(s, b)| (b - s).exp())
        .fold(f64::NEG_INFINITY, f64::max);
    let reach = if centers.len() <= FULL_PAIR_LIMIT {
        f64::INFINITY
    } else {
        2.0 * r * (2.0 * w.dim() as f64).sqrt() + 1e-9
    };
    let c2 = (0..centers.len())
        .into_par_iter()
        .map(|i| {
            let mut best = f64::NEG_INFINITY;
            for j in 0..centers.len() {
                if i == j {
                    continue;
                }
                let d = centers[i].dist(&centers[j]);
                if d <= reach {
                    best = best.max((masses[i].0 - masses[j].0) / d);
                }
            }
            best
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
        .exp();
    Ok(Doubling {
        c1,
        c2: if centers.len() > 1 { c2 } else { 1.0 },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightClassReport {
    pub p: f64,
    pub r: f64,
    pub r_sup: f64,
    pub dim: usize,
    pub center_count: usize,
    pub ap_constant: f64,
    pub ap_argmax: Option<Point>,
    pub a1_constant: Option<f64>,
    pub doubling_constant: f64,
    pub lattice_growth_constant: f64,
}

/// All class constants of `w` for exponent `p ≥ 1` at cube side `r`,
/// supremum taken over `rℤ²ⁿ ∩ B̄_{r_sup}`.
pub fn weight_class_report(w: &Weight, p: f64, r: f64, r_sup: f64) -> Result<WeightClassReport> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!(
            "class exponent p must be ≥ 1, got {p}"
        )));
    }
    let centers = lattice_points(r, r_sup, w.dim())?;
    let (ap, a1) = if p == 1.0 {
        let a1 = a1_restricted_constant(w, r, &centers)?;
        (a1, Some(a1.value))
    } else {
        (ap_restricted_constant(w, p, r, &centers)?, None)
    };
    let d = doubling_and_growth(w, r, r_sup)?;
    Ok(WeightClassReport {
        p,
        r,
        r_sup,
        dim: w.dim(),
        center_count: centers.len(),
        ap_constant: ap.value,
        ap_argmax: ap.argmax,
        a1_constant: a1,
        doubling_constant: d.c1,
        lattice_growth_constant: d.c2,
    })
}

/// Class constant for one exponent, with its profile along radial shells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentProbe {
    pub p: f64,
    pub sup: f64,
    pub shell_radii: Vec<f64>,
    pub shell_values: Vec<f64>,
    pub growing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AInfinityVerdict {
    pub member: bool,
    pub probes: Vec<ExponentProbe>,
}

/// Exponents tried for membership in `A^res_∞ = ∪_p A^res_p`.
pub const PROBE_EXPONENTS: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

fn shell_centers(rho: f64, dim: usize) -> Vec<Point> {
    if rho == 0.0 {
        return vec![Point::origin(dim)];
    }
    let mut out = Vec::new();
    for axis in 0..2 * dim {
        for sign in [1.0, -1.0] {
            let mut c = [0.0; 4];
            c[axis] = sign * rho;
            out.push(Point::from_coords(&c[..2 * dim]).expect("finite"));
        }
    }
    out
}

/// Whether the profile keeps climbing: strictly increasing over the last
/// three shells and at least 1.5× its first value.
pub fn profile_grows(values: &[f64]) -> bool {
    let n = values.len();
    if n < 3 {
        return false;
    }
    let tail = &values[n - 3..];
    let increasing = tail.windows(2).all(|w| w[1] > w[0]);
    increasing && (values[n - 1] == f64::INFINITY || values[n - 1] > 1.5 * values[0])
}

/// `w ∈ A^res_∞` iff for some probe exponent the lattice supremum stays
/// below [`MEMBERSHIP_SENTINEL`] and the constant does not keep growing
/// along the shells `|z| ∈ {0, R/4, R/2, 3R/4, R}`.
pub fn a_infinity_verdict(w: &Weight, r: f64, r_sup: f64) -> Result<AInfinityVerdict> {
    let lattice = lattice_points(r, r_sup, w.dim())?;
    let shell_radii: Vec<f64> = (0..5).map(|k| r_sup * k as f64 / 4.0).collect();
    let constant = |p: f64, centers: &[Point]| -> Result<f64> {
        Ok(if p == 1.0 {
            a1_restricted_constant(w, r, centers)?.value
        } else {
            ap_restricted_constant(w, p, r, centers)?.value
        })
    };
    let mut probes = Vec::new();
    for p in PROBE_EXPONENTS {
        let sup = constant(p, &lattice)?;
        let shell_values = shell_radii
            .iter()
            .map(|rho| constant(p, &shell_centers(*rho, w.dim())))
            .collect::<Result<Vec<_>>>()?;
        let growing = profile_grows(&shell_values);
        probes.push(ExponentProbe {
            p,
            sup,
            shell_radii: shell_radii.clone(),
            shell_values,
            growing,
        });
    }
    let member = probes
        .iter()
        .any(|e| e.sup < MEMBERSHIP_SENTINEL && !e.growing);
    Ok(AInfinityVerdict { member, probes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn gauss_up() -> Weight {
        // e^{|z|²}
        Weight::radial_power_gauss(0.0, -1.0, 1).unwrap()
    }

    #[test]
    fn unit_weight_constants() {
        let w = Weight::unit(1);
        let centers = lattice_points(1.0, 8.0, 1).unwrap();
        for p in [1.5, 2.0, 4.0] {
            let c = ap_restricted_constant(&w, p, 1.0, &centers).unwrap();
            assert!((c.value - 1.0).abs() < 1e-12);
        }
        assert!((a1_restricted_constant(&w, 1.0, &centers).unwrap().value - 1.0).abs() < 1e-12);
        let d = doubling_and_growth(&w, 1.0, 8.0).unwrap();
        assert_relative_eq!(d.c1, 9.0, max_relative = 1e-12);
        assert_relative_eq!(d.c2, 1.0, max_relative = 1e-12);
        let d2 = doubling_and_growth(&Weight::unit(2), 1.0, 2.0).unwrap();
        assert_relative_eq!(d2.c1, 81.0, max_relative = 1e-12);
    }

    #[test]
    fn exp_linear_ap_is_center_uniform() {
        let w = Weight::exp_linear(&[1.0, 0.0]).unwrap();
        let exact = (0.5f64.exp() - (-0.5f64).exp()).powi(2);
        let mut vals = Vec::new();
        for z in lattice_points(1.0, 8.0, 1).unwrap() {
            vals.push(ap_restricted_constant(&w, 2.0, 1.0, &[z]).unwrap().value);
        }
        let (lo, hi) = vals
            .iter()
            .fold((f64::MAX, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        assert_relative_eq!(hi, exact, max_relative = 1e-12);
        assert!(hi / lo < 1.0 + 1e-3);
        assert_relative_eq!(exact, 1.0862, epsilon = 1e-4);
    }

    #[test]
    fn exp_linear_a1_closed_form() {
        let w = Weight::exp_linear(&[1.0, 0.0]).unwrap();
        let centers = lattice_points(1.0, 6.0, 1).unwrap();
        let c = a1_restricted_constant(&w, 1.0, &centers).unwrap();
        assert_relative_eq!(c.value, std::f64::consts::E - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn exp_linear_doubling_is_center_independent() {
        let w = Weight::exp_linear(&[1.0, 0.0]).unwrap();
        let exact = 3.0 * 1.5f64.sinh() / 0.5f64.sinh();
        for r_sup in [2.0, 5.0, 8.0] {
            let d = doubling_and_growth(&w, 1.0, r_sup).unwrap();
            assert_relative_eq!(d.c1, exact, max_relative = 1e-12);
            // neighbouring cubes differ by e along the real axis
            assert_relative_eq!(d.c2, std::f64::consts::E, max_relative = 1e-12);
        }
    }

    #[test]
    fn gaussian_growth_weight_constant_grows() {
        let w = gauss_up();
        let vals: Vec<f64> = [0.0, 2.0, 4.0, 6.0]
            .iter()
            .map(|x| {
                ap_restricted_constant(&w, 2.0, 1.0, &[Point::c1(*x, 0.0)])
                    .unwrap()
                    .value
            })
            .collect();
        assert!(vals.windows(2).all(|v| v[1] > v[0]), "{vals:?}");
        let c2: Vec<f64> = [2.0, 4.0, 6.0]
            .iter()
            .map(|r| doubling_and_growth(&w, 1.0, *r).unwrap().c2)
            .collect();
        assert!(c2.windows(2).all(|v| v[1] > v[0]), "{c2:?}");
    }

    #[test]
    fn membership_verdicts() {
        assert!(
            a_infinity_verdict(&Weight::unit(1), 1.0, 8.0)
                .unwrap()
                .member
        );
        assert!(
            a_infinity_verdict(&Weight::exp_linear(&[0.5, 0.0]).unwrap(), 1.0, 8.0)
                .unwrap()
                .member
        );
        assert!(
            a_infinity_verdict(&Weight::radial_power_gauss(1.0, 0.0, 1).unwrap(), 1.0, 8.0)
                .unwrap()
                .member
        );
        let v = a_infinity_verdict(&gauss_up(), 1.0, 8.0).unwrap();
        assert!(!v.member, "{v:?}");
    }

    #[test]
    fn report_for_p_one_carries_a1() {
        let w = Weight::exp_linear(&[1.0, 0.0]).unwrap();
        let rep = weight_class_report(&w, 1.0, 1.0, 4.0).unwrap();
        assert_eq!(rep.a1_constant, Some(rep.ap_constant));
        let rep2 = weight_class_report(&w, 2.0, 2.0, 4.0).unwrap();
        assert!(rep2.a1_constant.is_none());
        assert!(rep2.ap_constant >= 1.0 && rep2.doubling_constant >= 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn constants_ignore_scaling(lambda in 1e-3f64..1e3, s in -1.0f64..2.0, p in 1.2f64..6.0) {
            let w = Weight::radial_power_gauss(s, 0.0, 1).unwrap();
            let ws = w.scaled(lambda).unwrap();
            let centers = lattice_points(1.0, 3.0, 1).unwrap();
            prop_assert_eq!(
                ap_restricted_constant(&w, p, 1.0, &centers).unwrap(),
                ap_restricted_constant(&ws, p, 1.0, &centers).unwrap()
            );
            prop_assert_eq!(
                a1_restricted_constant(&w, 1.0, &centers).unwrap(),
                a1_restricted_constant(&ws, 1.0, &centers).unwrap()
            );
            prop_assert_eq!(doubling_and_growth(&w, 1.0, 3.0).unwrap(), doubling_and_growth(&ws, 1.0, 3.0).unwrap());
        }

        #[test]
        fn constants_are_at_least_one(s in -1.0f64..2.0, eps in 0.0f64..0.2, p in 1.2f64..6.0) {
            let w = Weight::radial_power_gauss(s, eps, 1).unwrap();
            let centers = lattice_points(1.0, 4.0, 1).unwrap();
            prop_assert!(ap_restricted_constant(&w, p, 1.0, &centers).unwrap().value >= 1.0 - 1e-9);
            prop_assert!(a1_restricted_constant(&w, 1.0, &centers).unwrap().value >= 1.0 - 1e-9);
        }
    }
}
