use super::*;
use crate::measures::{Atom, Density};
use crate::spaces::{kernel_norm_closed_form, EntireFunction};
use approx::assert_relative_eq;
use proptest::prelude::*;

fn one() -> EntireFunction {
    EntireFunction::kernel(Point::origin(1), 1.0)
}

fn coarse() -> QuadratureGrid {
    QuadratureGrid::new(0.25, 4.0, 1).unwrap()
}

#[test]
fn berezin_single_atom() {
    let mu = Measure::dirac(Point::c1(1.0, 0.0), 1.0).unwrap();
    let bp = BerezinParams::new(2.0, 1.0, 1.0).unwrap();
    let v = berezin_apply(&mu, &one(), &bp, &Point::origin(1), &coarse()).unwrap();
    assert_relative_eq!(v, (-0.25f64).exp() * (-0.5f64).exp(), max_relative = 1e-15);
    assert_eq!(
        berezin_apply(&Measure::zero(1), &one(), &bp, &Point::origin(1), &coarse()).unwrap(),
        0.0
    );
}

#[test]
fn berezin_of_lebesgue() {
    let bp = BerezinParams::new(1.0, 1.0, 1.0).unwrap();
    let mu = Measure::lebesgue(1);
    for x in [0.0, 2.0] {
        let z = Point::c1(x * 0.6, x * 0.8);
        let grid = QuadratureGrid::covering(0.05, 0.5, z.norm(), 1).unwrap();
        let v = berezin_apply(&mu, &one(), &bp, &z, &grid).unwrap();
        assert_relative_eq!(
            v,
            std::f64::consts::PI * (-z.norm_sq() / 4.0).exp(),
            max_relative = 1e-10
        );
    }
}

#[test]
fn berezin_rejects_non_positive_parameters() {
    let e = BerezinParams::new(-1.0, 1.0, 1.0).unwrap_err();
    assert!(e.to_string().contains("BerezinParams.t"));
}

#[test]
fn toeplitz_single_atom() {
    let u0 = Point::c1(0.5, -1.0);
    let mu = Measure::dirac(u0, 1.0).unwrap();
    let f = EntireFunction::kernel(Point::c1(0.3, 0.2), 1.0);
    let z = Point::c1(-0.4, 0.9);
    let got = toeplitz_apply(&mu, &f, 1.0, &z, &coarse()).unwrap();
    let ip = z.inner(&u0);
    let want = f.eval(&u0).unwrap() * Complex64::new(ip.re - u0.norm_sq(), ip.im).exp();
    assert_relative_eq!(got.re, want.re, max_relative = 1e-13);
    assert_relative_eq!(got.im, want.im, max_relative = 1e-13);
    let zero = toeplitz_apply(&Measure::zero(1), &f, 1.0, &z, &coarse()).unwrap();
    assert_eq!(zero, Complex64::new(0.0, 0.0));
}

#[test]
fn toeplitz_of_lebesgue_reproduces_kernel() {
    for alpha in [1.0, 0.5] {
        let w = Point::c1(1.0, 0.0);
        let z = Point::c1(0.0, 1.0);
        let f = EntireFunction::kernel(w, alpha);
        let grid = QuadratureGrid::covering(0.05, alpha / 2.0, 1.0, 1).unwrap();
        let got = toeplitz_apply(&Measure::lebesgue(1), &f, alpha, &z, &grid).unwrap();
        let want = f.eval(&z).unwrap() * (std::f64::consts::PI / alpha);
        assert_relative_eq!(got.re, want.re, max_relative = 1e-9);
        assert_relative_eq!(got.im, want.im, max_relative = 1e-9);
    }
}

#[test]
fn projection_reproduces_kernels() {
    let u = Point::c1(1.0, 0.0);
    let z = Point::c1(0.0, 1.0);
    let k = EntireFunction::kernel(u, 1.0);
    let grid = QuadratureGrid::covering(0.05, 0.5, 1.0, 1).unwrap();
    let got = fock_projection(|x| k.eval(x).unwrap(), 1.0, &z, &grid).unwrap();
    let want = k.eval(&z).unwrap();
    assert_relative_eq!(got.re, want.re, max_relative = 1e-9);
    assert_relative_eq!(got.im, want.im, max_relative = 1e-9);
    let c = fock_projection(|_| Complex64::new(1.0, 0.0), 1.0, &z, &grid).unwrap();
    assert_relative_eq!(c.re, 1.0, max_relative = 1e-9);
    let conj = fock_projection(|x| x.complex(0).conj(), 1.0, &Point::origin(1), &grid).unwrap();
    assert!(conj.norm() < 1e-12);
}

#[test]
fn projection_is_idempotent_on_kernels() {
    let grid = QuadratureGrid::new(0.25, 6.5, 1).unwrap();
    let wide = QuadratureGrid::new(0.25, 13.0, 1).unwrap();
    let nodes = grid.nodes();
    for (u, alpha) in [(Point::c1(1.0, 0.0), 1.0), (Point::c1(-0.5, 0.5), 0.5)] {
        let k = EntireFunction::kernel(u, alpha);
        let once: Vec<Complex64> = nodes
            .iter()
            .map(|x| fock_projection(|y| k.eval(y).unwrap(), alpha, x, &wide).unwrap())
            .collect();
        let table: std::collections::HashMap<[u64; 2], Complex64> = nodes
            .iter()
            .zip(&once)
            .map(|(x, v)| ([x.coord(0).to_bits(), x.coord(1).to_bits()], *v))
            .collect();
        let z = Point::c1(0.4, -0.2);
        let single = fock_projection(|y| k.eval(y).unwrap(), alpha, &z, &grid).unwrap();
        let twice = fock_projection(
            |y| table[&[y.coord(0).to_bits(), y.coord(1).to_bits()]],
            alpha,
            &z,
            &grid,
        )
        .unwrap();
        let tol = (single - k.eval(&z).unwrap()).norm().max(1e-12);
        assert!(
            (twice - single).norm() <= 2.0 * tol.max(1e-9 * single.norm()),
            "{twice} vs {single}"
        );
    }
}

#[test]
fn s_target_norm_examples() {
    let bp = BerezinParams::new(1.0, 1.0, 1.0).unwrap();
    let w = Weight::unit(1);
    let grid = QuadratureGrid::covering(0.05, 0.5, 0.0, 1).unwrap();
    assert_eq!(
        s_target_norm(&Measure::zero(1), &one(), &bp, 2.0, &w, &grid).unwrap(),
        0.0
    );
    let delta = Measure::dirac(Point::origin(1), 1.0).unwrap();
    let v = s_target_norm(&delta, &one(), &bp, 2.0, &w, &grid).unwrap();
    assert_relative_eq!(v, std::f64::consts::PI.sqrt(), max_relative = 1e-10);
    for t in [1.0, 2.0, 0.5] {
        let bp = BerezinParams::new(t, 1.0, 1.0).unwrap();
        let base = s_target_norm(&delta, &one(), &bp, 2.0, &w, &grid).unwrap();
        let lambda = 1e3;
        let scaled =
            s_target_norm(&delta.scaled(lambda).unwrap(), &one(), &bp, 2.0, &w, &grid).unwrap();
        assert_relative_eq!(scaled, lambda.powf(1.0 / t) * base, max_relative = 1e-12);
    }
}

#[test]
fn t_target_norm_examples() {
    let w = Weight::unit(1);
    let alpha = 1.0;
    let k = EntireFunction::kernel(Point::c1(1.0, 0.0), alpha);
    let grid = QuadratureGrid::new(0.2, 8.0, 1).unwrap();
    assert_eq!(
        t_target_norm(&Measure::zero(1), &k, alpha, 2.0, &w, &grid).unwrap(),
        0.0
    );
    for q in [1.0, 2.0] {
        let got = t_target_norm(&Measure::lebesgue(1), &k, alpha, q, &w, &grid).unwrap();
        let want =
            std::f64::consts::PI / alpha * kernel_norm_closed_form(&Point::c1(1.0, 0.0), q, alpha);
        assert_relative_eq!(got, want, max_relative = 1e-6);
    }
}

#[test]
fn divergent_density_is_reported() {
    // f = K_u with u far out: the Lebesgue integrand lives near u, beyond every retry radius
    let f = EntireFunction::kernel(Point::c1(30.0, 0.0), 1.0);
    let bp = BerezinParams::new(1.0, 1.0, 1.0).unwrap();
    let err = berezin_apply(
        &Measure::lebesgue(1),
        &f,
        &bp,
        &Point::origin(1),
        &QuadratureGrid::new(0.25, 4.0, 1).unwrap(),
    );
    assert!(err.unwrap_err().is_divergence());
}

fn arb_measure() -> impl Strategy<Value = Measure> {
    (
        prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0.1f64..2.0), 1..8),
        any::<bool>(),
    )
        .prop_map(|(atoms, dens)| {
            let atoms = atoms
                .into_iter()
                .map(|(x, y, m)| Atom {
                    location: Point::c1(x, y),
                    mass: m,
                })
                .collect();
            let density = dens.then_some(Density::BallIndicator {
                c: 0.5,
                radius: 1.5,
            });
            Measure::new(1, atoms, density).unwrap()
        })
}

fn arb_function() -> impl Strategy<Value = EntireFunction> {
    prop::collection::vec(
        (-2.0f64..2.0, -2.0f64..2.0, -1.0f64..1.0, -1.0f64..1.0),
        1..4,
    )
    .prop_map(|terms| {
        let mut f = EntireFunction::zero(1);
        for (x, y, re, im) in terms {
            let k = EntireFunction::kernel(Point::c1(x, y), 1.0).scale(Complex64::new(re, im));
            f = f.add(&k).unwrap();
        }
        f
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn toeplitz_is_dominated_by_berezin(mu in arb_measure(), f in arb_function(), x in -4.0f64..4.0, y in -4.0f64..4.0) {
        let z = Point::c1(x, y);
        let grid = QuadratureGrid::new(0.1, 4.0, 1).unwrap();
        let alpha = 1.0;
        let t = toeplitz_field_damped(&mu, &f, alpha, &[z], &grid).unwrap()[0].norm();
        let s = berezin_apply(&mu, &f, &BerezinParams::new(1.0, alpha, alpha).unwrap(), &z, &grid).unwrap();
        prop_assert!(t <= s + 1e-8 + 1e-12 * s, "{} > {}", t, s);
    }

    #[test]
    fn berezin_is_absolutely_homogeneous(mu in arb_measure(), f in arb_function(), re in -3.0f64..3.0, im in -3.0f64..3.0, t in 0.5f64..3.0) {
        let z = Point::c1(0.3, -0.7);
        let bp = BerezinParams::new(t, 1.0, 1.5).unwrap();
        let c = Complex64::new(re, im);
        let a = berezin_apply(&mu, &f.scale(c), &bp, &z, &coarse()).unwrap();
        let b = berezin_apply(&mu, &f, &bp, &z, &coarse()).unwrap();
        prop_assert_eq!(a, c.norm() * b);
    }

    #[test]
    fn toeplitz_is_linear(mu in arb_measure(), f in arb_function(), g in arb_function(), re in -3.0f64..3.0) {
        let z = Point::c1(0.3, -0.7);
        let c = Complex64::new(re, 0.5);
        let lhs = toeplitz_apply(&mu, &f.scale(c).add(&g).unwrap(), 1.0, &z, &coarse()).unwrap();
        let rhs = c * toeplitz_apply(&mu, &f, 1.0, &z, &coarse()).unwrap() + toeplitz_apply(&mu, &g, 1.0, &z, &coarse()).unwrap();
        let scale = 1.0 + lhs.norm().max(rhs.norm());
        prop_assert!((lhs - rhs).norm() <= 1e-12 * scale);
    }

    #[test]
    fn adding_an_atom_never_decreases_berezin(mu in arb_measure(), f in arb_function(), x in -3.0f64..3.0, m in 0.01f64..2.0) {
        let z = Point::c1(0.5, 0.5);
        let bp = BerezinParams::new(2.0, 1.0, 1.0).unwrap();
        let before = berezin_apply(&mu, &f, &bp, &z, &coarse()).unwrap();
        let more = mu.with_atom(Atom { location: Point::c1(x, -x), mass: m }).unwrap();
        let after = berezin_apply(&more, &f, &bp, &z, &coarse()).unwrap();
        prop_assert!(after >= before * (1.0 - 1e-14));
    }
}
