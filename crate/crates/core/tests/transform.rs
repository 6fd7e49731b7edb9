use std::f64::consts::PI;

use approx::assert_relative_eq;
use bessel_dt::transform::{
    apply_t_n, cotlar_check, kernel_difference_l1, kernel_k_n, maximal_hl, maximal_t_star, verify_kn_bounds,
    verify_partial_tail_bounds, RadiusGrid,
};
use bessel_dt::*;
use proptest::prelude::*;

fn kernel() -> PoissonKernel {
    PoissonKernel::new(LambdaSpace::new(1.0).unwrap(), QuadratureSpec::default()).unwrap()
}

fn dyadic(half: i64, coeff: impl Fn(i64) -> f64) -> LacunarySetup {
    LacunarySetup::geometric(-half, 2f64.powi(-half as i32), 2.0, (2 * half + 1) as usize, 2.0, coeff).unwrap()
}

fn alternating(j: i64) -> f64 {
    if j.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn window(n1: i64, n2: i64) -> IndexWindow {
    IndexWindow::new(n1, n2).unwrap()
}

#[test]
fn kernel_sum_examples() {
    let k = kernel();
    let s = LacunarySetup::new(0, vec![1.0, 2.0, 4.0], vec![1.0, -1.0], 2.0).unwrap();
    // 2 P_2 - P_1 - P_4 at x = y = 1, with P_t(1, 1) = 4 / (pi t (4 + t^2))
    let expected = 2.0 / (4.0 * PI) - 4.0 / (5.0 * PI) - 1.0 / (20.0 * PI);
    assert_relative_eq!(expected, -7.0 / (20.0 * PI), max_relative = 1e-15);
    assert_relative_eq!(kernel_k_n(&k, &s, &window(0, 1), 1.0, 1.0).unwrap(), expected, max_relative = 1e-12);
    let ones = dyadic(6, |_| 1.0);
    let w = window(-3, 2);
    let direct = k.value(&KernelPoint::new(8.0, 0.7, 1.9).unwrap()).unwrap()
        - k.value(&KernelPoint::new(0.125, 0.7, 1.9).unwrap()).unwrap();
    assert_relative_eq!(kernel_k_n(&k, &ones, &w, 0.7, 1.9).unwrap(), direct, max_relative = 1e-13);
    let zeros = dyadic(6, |_| 0.0);
    assert_eq!(kernel_k_n(&k, &zeros, &w, 0.7, 1.9).unwrap(), 0.0);
}

#[test]
fn constants_and_zero_coefficients_vanish() {
    let k = kernel();
    let grid = Grid::log_spaced(1e-2, 1e2, 9).unwrap();
    let alt = dyadic(8, alternating);
    let zeros = dyadic(8, |_| 0.0);
    let cap = TruncationLevel::new(5).unwrap();
    let f = Profile::gaussian(1.0, 0.5);
    assert!(apply_t_n(&k, &alt, &window(-4, 4), &Profile::Constant(1.0), &grid).unwrap().max_abs() <= 1e-13);
    assert!(maximal_t_star(&k, &alt, &cap, &Profile::Constant(1.0), &grid).unwrap().max_abs() <= 1e-13);
    assert_eq!(maximal_t_star(&k, &zeros, &cap, &f, &grid).unwrap().max_abs(), 0.0);
    assert_eq!(apply_t_n(&k, &alt, &window(-4, 4), &Profile::Zero, &grid).unwrap().max_abs(), 0.0);
}

#[test]
fn maximal_operator_dominates_every_window() {
    let k = kernel();
    let s = dyadic(6, alternating);
    let grid = Grid::log_spaced(0.05, 20.0, 11).unwrap();
    let f = Profile::Bump { amplitude: 1.0, center: 1.0, radius: 0.7 };
    let m = 4;
    let star = maximal_t_star(&k, &s, &TruncationLevel::new(m).unwrap(), &f, &grid).unwrap();
    for n1 in -m..m {
        for n2 in n1 + 1..=m {
            let t = apply_t_n(&k, &s, &window(n1, n2), &f, &grid).unwrap();
            for (a, b) in t.values().iter().zip(star.values()) {
                assert!(a.abs() <= b * (1.0 + 1e-12) + 1e-15);
            }
        }
    }
}

#[test]
fn caps_outside_the_sequence_are_rejected() {
    let k = kernel();
    let s = dyadic(4, alternating);
    let grid = Grid::log_spaced(0.1, 10.0, 3).unwrap();
    let f = Profile::gaussian(1.0, 0.5);
    assert!(maximal_t_star(&k, &s, &TruncationLevel::new(4).unwrap(), &f, &grid).is_err());
    assert!(apply_t_n(&k, &s, &window(-5, 0), &f, &grid).is_err());
    assert!(TruncationLevel::new(0).is_err());
}

/// Uncentred maximal average of the indicator of (0, 1) at `x` for one radius, with `λ = 1`.
fn indicator_average(x: f64, r: f64) -> f64 {
    let lo = (x - r).max(0.0);
    let hi = x + r;
    let top = hi.min(1.0);
    let inside = if top > lo { (top.powi(3) - lo.powi(3)) / 3.0 } else { 0.0 };
    inside / ((hi.powi(3) - lo.powi(3)) / 3.0)
}

#[test]
fn hardy_littlewood_examples() {
    let s = LambdaSpace::new(1.0).unwrap();
    let q = QuadratureSpec::default();
    let at = Grid::new(vec![2.0]).unwrap();
    let chi = Profile::indicator(0.0, 1.0);
    let oracle = Grid::log_spaced(1e-3, 1e3, 10_000)
        .unwrap()
        .points()
        .iter()
        .map(|&r| indicator_average(2.0, r))
        .fold(0.0, f64::max);
    let dense = maximal_hl(&s, &chi, 1.0, &RadiusGrid::absolute(1e-3, 1e3, 10_000).unwrap(), &at, &q).unwrap();
    assert_relative_eq!(dense.values()[0], oracle, max_relative = 1e-10);
    let coarse = maximal_hl(&s, &chi, 1.0, &RadiusGrid::default_relative(), &at, &q).unwrap();
    assert!(coarse.values()[0] <= oracle * (1.0 + 1e-12) && coarse.values()[0] >= 0.99 * oracle);

    let grid = Grid::log_spaced(0.01, 100.0, 7).unwrap();
    for qq in [1.0, 2.0, 4.0] {
        let m = maximal_hl(&s, &Profile::Constant(1.0), qq, &RadiusGrid::default_relative(), &grid, &q).unwrap();
        assert!(m.values().iter().all(|v| (v - 1.0).abs() <= 1e-12));
    }
    // monotone in the exponent
    let f = Profile::gaussian(1.0, 0.3);
    let m1 = maximal_hl(&s, &f, 1.5, &RadiusGrid::default_relative(), &grid, &q).unwrap();
    let m2 = maximal_hl(&s, &f, 3.0, &RadiusGrid::default_relative(), &grid, &q).unwrap();
    for (a, b) in m1.values().iter().zip(m2.values()) {
        assert!(a <= &(b * (1.0 + 1e-10)));
    }
}

#[test]
fn cotlar_guard_paths() {
    let k = kernel();
    let s = dyadic(6, alternating);
    let cap = TruncationLevel::new(3).unwrap();
    let grid = Grid::log_spaced(0.1, 10.0, 5).unwrap();
    let radii = RadiusGrid::default_relative();
    let one = cotlar_check(&k, &s, &cap, &Profile::Constant(1.0), 2.0, &grid, &radii).unwrap();
    assert!(one.t_star.iter().all(|v| v.abs() <= 1e-13));
    assert!(one.maximal_q.iter().all(|v| (v - 1.0).abs() <= 1e-12));
    assert!(one.sup_ratio <= 1e-13);
    let zero = cotlar_check(&k, &s, &cap, &Profile::Zero, 2.0, &grid, &radii).unwrap();
    assert_eq!(zero.guarded, grid.len());
    assert_eq!(zero.sup_ratio, 0.0);
    assert!(cotlar_check(&k, &s, &cap, &Profile::Zero, 1.0, &grid, &radii).is_err());
}

#[test]
fn bound_reports_vanish_for_zero_coefficients() {
    let k = kernel();
    let zeros = dyadic(6, |_| 0.0);
    let sweep = [(0.5, 1.0), (1.0, 3.0), (2.0, 0.1)];
    let r = verify_kn_bounds(&k, &zeros, &window(-2, 2), &sweep).unwrap();
    assert_eq!(r.size_constant, 0.0);
    assert_eq!(r.smoothness_constant, 0.0);
    let cap = TruncationLevel::new(4).unwrap();
    let t = verify_partial_tail_bounds(&k, &zeros, 0, &cap, 1, &[(1.0, 3.5), (1.0, 1.5)]).unwrap();
    assert_eq!(t.lower.fitted_constant, 0.0);
    assert_eq!(t.upper.fitted_constant, 0.0);
    assert_eq!(t.lower.accepted, 1);
    assert_eq!(t.lower.rejected, 1);
}

#[test]
fn kernel_difference_is_dilation_invariant() {
    let k = kernel();
    for (t0, t1, x) in [(0.5, 1.0, 1.0), (1.0, 3.0, 0.2)] {
        let base = kernel_difference_l1(&k, t0, t1, x).unwrap();
        for c in [0.1, 10.0] {
            let scaled = kernel_difference_l1(&k, c * t0, c * t1, c * x).unwrap();
            assert_relative_eq!(base, scaled, max_relative = 1e-6);
        }
        assert!(base > 0.0 && base <= 2.0 + 1e-9);
    }
    assert!(kernel_difference_l1(&k, 1.0, 1.0, 1.0).is_err());
}

#[test]
fn closed_form_kernel_sum() {
    // v = 1 telescopes against the closed form kernel
    let cf = |t: f64, x: f64, y: f64| 4.0 * t / PI / (((x - y).powi(2) + t * t) * ((x + y).powi(2) + t * t));
    let ones = dyadic(6, |_| 1.0);
    let v = kernel_k_n(&kernel(), &ones, &window(-2, 1), 1.5, 0.4).unwrap();
    assert_relative_eq!(v, cf(4.0, 1.5, 0.4) - cf(0.25, 1.5, 0.4), max_relative = 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linear_and_additive(c in -3.0f64..3.0, n1 in -5i64..-1, k in 0i64..3, n2 in 4i64..7, center in 0.3f64..3.0) {
        let kern = kernel();
        let s = dyadic(8, alternating);
        let grid = Grid::log_spaced(0.1, 10.0, 6).unwrap();
        let f = Profile::Gaussian { amplitude: 1.0, center, width: 0.4 };
        let g = Profile::Bump { amplitude: 0.5, center: 2.0 * center, radius: center };
        let cf = Profile::Sum(vec![Profile::Gaussian { amplitude: c, center, width: 0.4 }, g.clone()]);
        let w = window(n1, n2);
        let tf = apply_t_n(&kern, &s, &w, &f, &grid).unwrap();
        let tg = apply_t_n(&kern, &s, &w, &g, &grid).unwrap();
        let tc = apply_t_n(&kern, &s, &w, &cf, &grid).unwrap();
        let scale = tf.max_abs().max(tg.max_abs()).max(1e-300);
        for i in 0..grid.len() {
            prop_assert!((tc.values()[i] - c * tf.values()[i] - tg.values()[i]).abs() <= 1e-8 * scale * (1.0 + c.abs()));
        }
        let left = apply_t_n(&kern, &s, &window(n1, k), &f, &grid).unwrap();
        let right = apply_t_n(&kern, &s, &window(k + 1, n2), &f, &grid).unwrap();
        for i in 0..grid.len() {
            prop_assert!((tf.values()[i] - left.values()[i] - right.values()[i]).abs() <= 1e-13 * tf.max_abs().max(1e-300) * 4.0);
        }
    }
}
