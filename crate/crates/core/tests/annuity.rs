//! Annuity factor against the discounted-sum definition.

mod common;

use common::annuity_by_summation as by_summation;
use ecplan_core::objective::annuity_factor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn one_year_at_five_percent_is_exact() {
    assert_eq!(annuity_factor(0.05, 1.0).unwrap(), 1.05);
}

#[test]
fn matches_discounted_sum_on_random_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let r = rng.random_range(0.001..0.25);
        let years = rng.random_range(1..=60u32);
        let got = annuity_factor(r, years as f64).unwrap();
        let want = by_summation(r, years);
        assert!((got - want).abs() <= 1e-12, "r={r} tau={years}: {got} vs {want}");
    }
}

#[test]
fn fractional_lifetimes_follow_the_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let r: f64 = rng.random_range(0.001..0.25);
        let tau: f64 = rng.random_range(1.0..60.0);
        let want = r / (1.0 - (1.0 + r).powf(-tau));
        assert!((annuity_factor(r, tau).unwrap() - want).abs() <= 1e-12);
    }
}
