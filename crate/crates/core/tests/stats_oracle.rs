mod common;

use common::{glass, rel_close, sample_pairs, two_sided_p, welch};
use noe_core::{glass_delta, independent_t_test};

#[test]
fn oracle_reproduces_known_tail() {
    // t = 2.228 at 10 df is the classic two-sided 5% critical value.
    assert!((two_sided_p(2.228_138_851_986_274, 10.0) - 0.05).abs() < 1e-9);
    assert!((two_sided_p(0.0, 7.0) - 1.0).abs() < 1e-12);
}

#[test]
fn welch_matches_oracle_on_random_pairs() {
    for (i, (a, b)) in sample_pairs(100, 7).iter().enumerate() {
        let got = independent_t_test(a, b).unwrap();
        let (t, df) = welch(a, b);
        assert!(rel_close(got.t, t, 1e-9), "pair {i}: t {} vs {t}", got.t);
        assert!(rel_close(got.df, df, 1e-9), "pair {i}: df {} vs {df}", got.df);
        let p = two_sided_p(t, df);
        assert!(rel_close(got.p_value, p, 1e-6), "pair {i}: p {} vs {p}", got.p_value);
    }
}

#[test]
fn glass_matches_oracle_on_random_pairs() {
    for (i, (a, b)) in sample_pairs(100, 8).iter().enumerate() {
        let got = glass_delta(a, b).unwrap();
        let want = glass(a, b);
        assert!(rel_close(got, want, 1e-9), "pair {i}: {got} vs {want}");
    }
}
