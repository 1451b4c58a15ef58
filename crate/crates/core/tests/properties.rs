use approx::{assert_abs_diff_eq, assert_relative_eq};
use num_complex::Complex64;
use proptest::prelude::*;
use shiftsolve::linear::{solve_linear, LinearOptions};
use shiftsolve::nonlinear::{convolve, convolve_direct};
use shiftsolve::operator::{estimate_alpha, symbol, symbol_modulus_sq};
use shiftsolve::spectral::INV_SQRT_2PI;
use shiftsolve::{FredholmClass, Grid, GridFunction, ShiftParams};

fn grid() -> Grid {
    Grid::new(20.0, 512).unwrap()
}

/// Sum of up to three shifted, modulated Gaussians.
fn packets() -> impl Strategy<Value = Vec<(f64, f64, f64, f64)>> {
    prop::collection::vec((-2.0..2.0f64, -3.0..3.0f64, 0.6..2.0f64, -2.0..2.0f64), 1..4)
}

fn sample(g: Grid, terms: &[(f64, f64, f64, f64)]) -> GridFunction {
    GridFunction::from_complex_fn(g, |x| {
        terms
            .iter()
            .map(|&(amp, c, s, k)| Complex64::from_polar(amp * (-(x - c).powi(2) / (2.0 * s * s)).exp(), k * x))
            .sum()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn parseval(terms in packets()) {
        let u = sample(grid(), &terms);
        assert_relative_eq!(u.forward_transform().l2_norm(), u.l2_norm(), max_relative = 1e-12);
    }

    #[test]
    fn round_trip(terms in packets()) {
        let u = sample(grid(), &terms);
        let back = u.forward_transform().inverse_transform();
        prop_assert!(back.sub(&u).unwrap().max_abs() <= 1e-13 * u.max_abs().max(1.0));
    }

    #[test]
    fn shift_is_unitary(terms in packets(), h in -5.0..5.0f64) {
        let u = sample(grid(), &terms);
        assert_relative_eq!(u.shift(h).l2_norm(), u.l2_norm(), max_relative = 1e-12);
    }

    #[test]
    fn transform_bounded_by_l1(terms in packets()) {
        let u = sample(grid(), &terms);
        let bound = u.l1_norm() * INV_SQRT_2PI;
        prop_assert!(u.forward_transform().sup_norm() <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn symbol_modulus_forms_agree(p in -10.0..10.0f64, a in 0.1..10.0f64, h in -10.0..10.0f64) {
        prop_assume!(h != 0.0);
        let params = ShiftParams::new(a, h).unwrap();
        let direct = symbol(p, &params).norm_sqr();
        let half_angle = symbol_modulus_sq(p, &params);
        assert_relative_eq!(direct, half_angle, max_relative = 1e-12, epsilon = 1e-300);
    }

    #[test]
    fn constructed_resonances_are_found(a in 0.1..100.0f64, n in prop::sample::select((-10i64..=10).filter(|n| *n != 0).collect::<Vec<_>>())) {
        let params = ShiftParams::resonant(a, n).unwrap();
        prop_assert_eq!(params.classify().unwrap(), FredholmClass::Resonant { n });
        assert_abs_diff_eq!(symbol_modulus_sq(a.sqrt(), &params), 0.0, epsilon = 1e-20 * a * a);
    }

    #[test]
    fn gap_bounds_symbol(a in 0.1..5.0f64, h in 0.1..5.0f64, p in -20.0..20.0f64) {
        let params = ShiftParams::new(a, h).unwrap();
        prop_assume!(!params.is_resonant());
        if let Ok(alpha) = estimate_alpha(&params) {
            prop_assert!(symbol_modulus_sq(p, &params) >= alpha * (1.0 - 1e-9));
        }
    }

    #[test]
    fn solution_obeys_stability_bound(terms in packets(), h in 0.3..3.0f64) {
        let params = ShiftParams::new(1.0, h).unwrap();
        prop_assume!(!params.is_resonant());
        let alpha = estimate_alpha(&params).unwrap();
        prop_assume!(alpha > 1e-3);
        let f = sample(grid(), &terms);
        let u = solve_linear(&f, &params, &LinearOptions::default()).unwrap();
        prop_assert!(u.u.l2_norm() <= f.l2_norm() / alpha.sqrt() * (1.0 + 1e-9));
    }

    #[test]
    fn convolution_routes_agree(a in packets(), b in packets()) {
        let g = Grid::new(20.0, 256).unwrap();
        let (u, v) = (sample(g, &a), sample(g, &b));
        let fast = convolve(&u, &v).unwrap();
        let slow = convolve_direct(&u, &v).unwrap();
        prop_assert!(fast.sub(&slow).unwrap().max_abs() <= 1e-11 * slow.max_abs().max(1.0));
    }

    #[test]
    fn csv_round_trip_is_exact(terms in packets()) {
        let u = sample(grid(), &terms);
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let back = GridFunction::read_csv(grid(), buf.as_slice()).unwrap();
        prop_assert_eq!(back.values(), u.values());
    }
}
