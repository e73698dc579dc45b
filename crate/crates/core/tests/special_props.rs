mod common;

use common::chisq1_upper;
use mefit_core::inference::special::{regularized_beta, regularized_gamma_p, regularized_gamma_q};
use mefit_core::{chisq_upper_tail, f_upper_tail};
use proptest::prelude::*;

#[test]
fn df2_closed_form() {
    for x in [0.5, 1.0, 4.0, 0.0, 10.0, 37.0] {
        assert!((chisq_upper_tail(x, 2.0).unwrap() - (-x / 2.0f64).exp()).abs() < 1e-10);
    }
}

#[test]
fn df1_against_erf_series() {
    for i in 0..=400 {
        let x = i as f64 * 0.05;
        let got = chisq_upper_tail(x, 1.0).unwrap();
        assert!((got - chisq1_upper(x)).abs() < 1e-10, "x={x}");
    }
    assert!((chisq_upper_tail(3.841459, 1.0).unwrap() - 0.05).abs() < 1e-4);
}

#[test]
fn f_approaches_scaled_chisq() {
    for d1 in [1.0, 2.0, 5.0] {
        for x in [0.2, 1.0, 2.5, 6.0] {
            let f = f_upper_tail(x, d1, 1e6).unwrap();
            let c = chisq_upper_tail(d1 * x, d1).unwrap();
            assert!((f - c).abs() < 1e-4, "d1={d1} x={x}: {f} vs {c}");
        }
    }
}

#[test]
fn tails_decrease_on_grid() {
    for (d1, d2) in [(1.0, 24.0), (2.0, 5.0), (4.0, 200.0)] {
        let mut prev = f64::INFINITY;
        for i in 0..1000 {
            let p = f_upper_tail(i as f64 * 0.02, d1, d2).unwrap();
            assert!(p < prev || (p == 0.0 && prev == 0.0));
            prev = p;
        }
    }
    for k in [1.0, 3.0, 30.0] {
        let mut prev = f64::INFINITY;
        for i in 0..1000 {
            let p = chisq_upper_tail(i as f64 * 0.05, k).unwrap();
            // within rounding of 1 consecutive values may coincide
            assert!(p < prev || (p == prev && p > 1.0 - 1e-12), "k={k} i={i} {p} {prev}");
            prev = p;
        }
    }
}

#[test]
fn f_tail_with_one_and_large_df_is_t_squared_like() {
    assert!((f_upper_tail(0.8452, 1.0, 24.0).unwrap() - 0.3671).abs() < 5e-4);
    assert_eq!(f_upper_tail(0.0, 3.0, 7.0).unwrap(), 1.0);
}

proptest! {
    #[test]
    fn beta_symmetry(a in 0.1f64..50.0, b in 0.1f64..50.0, x in 0.0f64..=1.0) {
        let l = regularized_beta(a, b, x).unwrap();
        let r = regularized_beta(b, a, 1.0 - x).unwrap();
        prop_assert!((l + r - 1.0).abs() < 1e-10);
        prop_assert!((0.0..=1.0).contains(&l));
    }

    #[test]
    fn gamma_p_plus_q_is_one(a in 0.05f64..100.0, x in 0.0f64..200.0) {
        let p = regularized_gamma_p(a, x).unwrap();
        let q = regularized_gamma_q(a, x).unwrap();
        prop_assert!((p + q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn f_tail_monotone(d1 in 1u32..50, d2 in 1u32..200, x in 0.0f64..100.0, dx in 1e-3f64..5.0) {
        let a = f_upper_tail(x, d1 as f64, d2 as f64).unwrap();
        let b = f_upper_tail(x + dx, d1 as f64, d2 as f64).unwrap();
        prop_assert!(b <= a);
    }
}
