//! History with traceable values and brute-force references for the
//! bootstrap and k-medoids.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate, Weekday};
use ecplan_core::scenario::*;

use super::t0;

/// Every value encodes its own (day, hour), so any block can be traced back.
pub fn tagged_history(days: usize) -> History {
    let n = days * 24;
    let code = |scale: f64, off: f64| (0..n).map(|i| off + scale * i as f64).collect::<Vec<f64>>();
    let channels = BTreeMap::from([
        (P_EL.to_string(), code(1.0, 0.0)),
        (P_GAS.to_string(), code(0.5, 1.0)),
        (P_CO2.to_string(), code(0.25, 2.0)),
        (T_AMB.to_string(), code(-0.01, 20.0)),
        (I_SOL.to_string(), code(2.0, 3.0)),
        (e_base_channel(1), code(0.1, 0.3)),
        (t_set_channel(1), code(0.001, 17.0)),
    ]);
    History::new(t0(), 1.0, channels).unwrap()
}

pub fn gap(a: NaiveDate, b: NaiveDate) -> i64 {
    let (x, y) = (a.ordinal0().min(364) as i64, b.ordinal0().min(364) as i64);
    let d = (x - y).rem_euclid(365);
    d.min(365 - d)
}

pub fn weekend(d: NaiveDate) -> bool {
    matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

pub fn exhaustive(d: &[Vec<f64>], k: usize) -> f64 {
    let n = d.len();
    subsets(n, k)
        .iter()
        .map(|m| (0..n).map(|p| m.iter().map(|&j| d[p][j]).fold(f64::INFINITY, f64::min)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}
