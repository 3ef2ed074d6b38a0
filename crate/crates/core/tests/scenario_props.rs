//! Bootstrap and k-medoids checked by brute force.

mod common;

use chrono::Duration;
use common::scen::*;
use common::t0;
use ecplan_core::scenario::*;
use proptest::prelude::*;

#[test]
fn every_block_is_a_verbatim_day_inside_the_seasonal_window() {
    let h = tagged_history(365);
    let spec = BootstrapSpec { n_years: 20, rng_seed: 11, ..Default::default() };
    let years = bootstrap_years(&h, &spec).unwrap();
    let names: Vec<String> = h.channels.keys().cloned().collect();
    let (mut blocks, mut hits) = (0usize, 0usize);
    for y in &years {
        let s = h.materialize(&y.id(), 1.0, &y.days).unwrap();
        for j in 0..365 {
            let target = t0().date() + Duration::days(j as i64);
            blocks += 1;
            // scan the whole history for days equal on every channel
            let matches: Vec<usize> = (0..365)
                .filter(|&d| {
                    names.iter().all(|c| {
                        let got = &scenario_channel(&s, c).unwrap()[j * 24..(j + 1) * 24];
                        got == &h.channels[c][d * 24..(d + 1) * 24]
                    })
                })
                .collect();
            assert_eq!(matches.len(), 1, "block {j} of {} matches {matches:?}", y.id());
            let src = t0().date() + Duration::days(matches[0] as i64);
            if gap(src, target) <= 56 && weekend(src) == weekend(target) {
                hits += 1;
            }
        }
    }
    assert_eq!(hits, blocks);
}

#[test]
fn bootstrap_is_deterministic_and_thread_independent() {
    let h = tagged_history(400);
    let spec = BootstrapSpec { n_years: 12, rng_seed: 3, ..Default::default() };
    let a = bootstrap_years(&h, &spec).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| bootstrap_years(&h, &spec)).unwrap();
    assert_eq!(a, b);
    let c = bootstrap_years(&h, &BootstrapSpec { rng_seed: 4, ..spec }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn zero_window_on_one_year_reproduces_the_history() {
    let h = tagged_history(365);
    let spec = BootstrapSpec { n_years: 3, window_weeks: 0, ..Default::default() };
    for y in bootstrap_years(&h, &spec).unwrap() {
        assert_eq!(y.days, h.identity_year());
    }
}

fn check_partition(d: &[Vec<f64>], k: usize, seed: u64) -> Result<(), TestCaseError> {
    let n = d.len();
    let dist = DistanceMatrix::from_fn(n, |i, j| d[i][j]);
    let c = kmedoids(&dist, k, &KMedoidsOptions { seed, ..Default::default() }).unwrap();
    let best = exhaustive(d, k);
    prop_assert!((c.cost - best).abs() <= 1e-9 * best.max(1.0), "pam {} exhaustive {}", c.cost, best);
    prop_assert_eq!(c.medoids.len(), k);
    prop_assert!(c.medoids.windows(2).all(|w| w[0] < w[1]));
    prop_assert!(c.medoids.iter().all(|&m| m < n));
    for (i, &m) in c.medoids.iter().enumerate() {
        prop_assert_eq!(c.assignment[m], i);
    }
    prop_assert_eq!(c.counts.iter().sum::<usize>(), n);
    prop_assert_eq!(c.probabilities.iter().sum::<f64>(), 1.0);
    prop_assert!(c.trace.windows(2).all(|w| w[1] <= w[0]));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn pam_matches_exhaustive_on_planar_points(
        pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..=8),
        k in 1usize..=3,
        seed in 0u64..100,
    ) {
        let k = k.min(pts.len());
        let d: Vec<Vec<f64>> = pts.iter()
            .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
            .collect();
        check_partition(&d, k, seed)?;
    }

    #[test]
    fn pam_matches_exhaustive_on_tied_integer_distances(
        n in 1usize..=8,
        raw in prop::collection::vec(0u8..4, 28),
        k in 1usize..=3,
    ) {
        let k = k.min(n);
        let mut d = vec![vec![0.0; n]; n];
        let mut it = raw.iter();
        for i in 0..n {
            for j in i + 1..n {
                let v = *it.next().unwrap() as f64;
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        check_partition(&d, k, 0)?;
    }

    #[test]
    fn count_weights_sum_to_one(counts in prop::collection::vec(1usize..500, 1..40)) {
        let w = count_weights(&counts);
        prop_assert_eq!(w.iter().sum::<f64>(), 1.0);
        let n: usize = counts.iter().sum();
        for (c, p) in counts.iter().zip(&w) {
            prop_assert!((p - *c as f64 / n as f64).abs() <= 1e-15);
        }
    }
}

#[test]
fn separated_blobs_are_recovered() {
    let centers = [(0.0, 0.0), (50.0, 0.0), (0.0, 50.0)];
    let mut pts = Vec::new();
    for (ci, c) in centers.iter().enumerate() {
        for i in 0..7 {
            let a = i as f64 * 0.9 + ci as f64;
            pts.push((c.0 + a.cos(), c.1 + a.sin()));
        }
    }
    let dist = DistanceMatrix::from_fn(pts.len(), |i, j| {
        ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2)).sqrt()
    });
    let c = kmedoids(&dist, 3, &KMedoidsOptions::default()).unwrap();
    assert_eq!(c.counts, vec![7, 7, 7]);
    for (p, &a) in c.assignment.iter().enumerate() {
        assert_eq!(a, p / 7);
    }
}

#[test]
fn reduction_weights_follow_cluster_sizes() {
    let h = tagged_history(365);
    let years = bootstrap_years(&h, &BootstrapSpec { n_years: 30, rng_seed: 5, ..Default::default() }).unwrap();
    let r = reduce_scenarios(&h, &years, 4, &KMedoidsOptions::default()).unwrap();
    assert_eq!(r.years.len(), 4);
    assert_eq!(r.counts.iter().sum::<usize>(), 30);
    assert_eq!(r.probabilities.iter().sum::<f64>(), 1.0);
    for y in &r.years {
        assert!(years.contains(y));
    }
}
