//! Scenario generation and reduction.
//!
//! Synthetic years are drawn day by day from a seasonal window of the
//! history and kept as lists of source-day indices until materialized.
//! Years are compared on z-normalized channels; since every synthetic day is
//! a copy of a historical day, the squared year distance is a sum of
//! precomputed day-pair distances.

use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::types::{Climate, Economic, Occupant, Scenario, TimeSeries, Unit};
use crate::Error;

pub const DAYS_PER_YEAR: usize = 365;

pub const P_EL: &str = "p_el";
pub const P_GAS: &str = "p_gas";
pub const P_CO2: &str = "p_co2";
pub const T_AMB: &str = "T_amb";
pub const I_SOL: &str = "I_sol";

pub fn e_base_channel(building: usize) -> String {
    format!("E_base_b{building}")
}

pub fn t_set_channel(building: usize) -> String {
    format!("T_set_b{building}")
}

/// Unit implied by a channel name.
pub fn channel_unit(name: &str) -> Option<Unit> {
    Some(match name {
        P_EL => Unit::EurPerKwh,
        P_GAS | P_CO2 => Unit::EurPerGasKwh,
        T_AMB => Unit::Celsius,
        I_SOL => Unit::WattPerSquareMetre,
        _ if parse_building_channel(name, "E_base_b").is_some() => Unit::Kilowatt,
        _ if parse_building_channel(name, "T_set_b").is_some() => Unit::Celsius,
        _ => return None,
    })
}

fn parse_building_channel(name: &str, prefix: &str) -> Option<usize> {
    name.strip_prefix(prefix)?.parse().ok()
}

/// Uncertainty factor groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    Occ,
    Eco,
    Clim,
}

impl Factor {
    pub const ALL: [Factor; 3] = [Factor::Occ, Factor::Eco, Factor::Clim];

    pub fn name(self) -> &'static str {
        match self {
            Factor::Occ => "occ",
            Factor::Eco => "eco",
            Factor::Clim => "clim",
        }
    }

    pub fn channels(self, buildings: &[usize]) -> Vec<String> {
        match self {
            Factor::Occ => buildings
                .iter()
                .flat_map(|&b| [e_base_channel(b), t_set_channel(b)])
                .collect(),
            Factor::Eco => vec![P_EL.into(), P_GAS.into(), P_CO2.into()],
            Factor::Clim => vec![T_AMB.into(), I_SOL.into()],
        }
    }

    /// Channels of the other two factors.
    pub fn complement_channels(self, buildings: &[usize]) -> Vec<String> {
        Factor::ALL
            .into_iter()
            .filter(|&f| f != self)
            .flat_map(|f| f.channels(buildings))
            .collect()
    }
}

impl std::str::FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "occ" => Ok(Factor::Occ),
            "eco" => Ok(Factor::Eco),
            "clim" => Ok(Factor::Clim),
            _ => Err(Error::Invalid(format!("unknown factor `{s}` (occ, eco, clim)"))),
        }
    }
}

/// Aligned multi-channel history.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub start: NaiveDateTime,
    pub step_hours: f64,
    pub channels: BTreeMap<String, Vec<f64>>,
}

impl History {
    pub fn new(
        start: NaiveDateTime,
        step_hours: f64,
        channels: BTreeMap<String, Vec<f64>>,
    ) -> Result<Self, Error> {
        let h = Self {
            start,
            step_hours,
            channels,
        };
        h.check()?;
        Ok(h)
    }

    pub fn check(&self) -> Result<(), Error> {
        if !(self.step_hours > 0.0 && (24.0 / self.step_hours).fract() == 0.0) {
            return Err(Error::Invalid(format!(
                "history step {} h does not divide a day",
                self.step_hours
            )));
        }
        if self.start.time() != chrono::NaiveTime::MIN {
            return Err(Error::Invalid("history must start at midnight".into()));
        }
        let mut len = None;
        for (name, v) in &self.channels {
            if channel_unit(name).is_none() {
                return Err(Error::Invalid(format!("unknown history channel `{name}`")));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid(format!("channel {name} has non-finite values")));
            }
            match len {
                None => len = Some(v.len()),
                Some(n) if n != v.len() => {
                    return Err(Error::Invalid(format!(
                        "channel {name} has {} values, others {n}",
                        v.len()
                    )))
                }
                _ => {}
            }
        }
        for c in [P_EL, P_GAS, P_CO2, T_AMB, I_SOL] {
            if !self.channels.contains_key(c) {
                return Err(Error::Invalid(format!("history lacks channel `{c}`")));
            }
        }
        for b in self.buildings() {
            if !self.channels.contains_key(&t_set_channel(b)) {
                return Err(Error::Invalid(format!("history lacks channel `{}`", t_set_channel(b))));
            }
        }
        if self.days() < DAYS_PER_YEAR {
            return Err(Error::Invalid(format!(
                "history spans {} whole days, at least {DAYS_PER_YEAR} needed",
                self.days()
            )));
        }
        Ok(())
    }

    pub fn steps_per_day(&self) -> usize {
        (24.0 / self.step_hours).round() as usize
    }

    pub fn len(&self) -> usize {
        self.channels.values().next().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of whole days covered.
    pub fn days(&self) -> usize {
        self.len() / self.steps_per_day()
    }

    /// Building ids with a base-load channel.
    pub fn buildings(&self) -> Vec<usize> {
        self.channels
            .keys()
            .filter_map(|k| parse_building_channel(k, "E_base_b"))
            .collect()
    }

    pub fn date_of_day(&self, day: usize) -> NaiveDate {
        self.start.date() + Duration::days(day as i64)
    }

    fn day_slice(&self, channel: &str, day: usize) -> &[f64] {
        let s = self.steps_per_day();
        &self.channels[channel][day * s..(day + 1) * s]
    }

    /// Values of `channel` for a sequence of source days.
    pub fn assemble(&self, channel: &str, days: &[u32]) -> Result<Vec<f64>, Error> {
        if !self.channels.contains_key(channel) {
            return Err(Error::Invalid(format!("history lacks channel `{channel}`")));
        }
        let mut out = Vec::with_capacity(days.len() * self.steps_per_day());
        for &d in days {
            out.extend_from_slice(self.day_slice(channel, d as usize));
        }
        Ok(out)
    }

    /// Builds a scenario whose day `j` copies source day `days[j]`.
    pub fn materialize(&self, id: &str, probability: f64, days: &[u32]) -> Result<Scenario, Error> {
        let ts = |c: &str| -> Result<TimeSeries, Error> {
            Ok(TimeSeries {
                start: self.start,
                step_hours: self.step_hours,
                values: self.assemble(c, days)?,
                unit: channel_unit(c).expect("validated channel"),
            })
        };
        let mut occupant = BTreeMap::new();
        for b in self.buildings() {
            occupant.insert(
                b,
                Occupant {
                    e_base: ts(&e_base_channel(b))?,
                    t_set: ts(&t_set_channel(b))?,
                },
            );
        }
        Ok(Scenario {
            id: id.to_string(),
            probability,
            occupant,
            economic: Economic {
                p_el: ts(P_EL)?,
                p_gas: ts(P_GAS)?,
                p_co2: ts(P_CO2)?,
            },
            climate: Climate {
                t_amb: ts(T_AMB)?,
                i_sol: ts(I_SOL)?,
            },
        })
    }

    /// The first year of history as stored, day for day.
    pub fn identity_year(&self) -> Vec<u32> {
        (0..DAYS_PER_YEAR as u32).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub block_hours: u32,
    pub window_weeks: u32,
    pub n_years: usize,
    pub rng_seed: u64,
    pub weekday_partition: bool,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        Self {
            block_hours: 24,
            window_weeks: 8,
            n_years: 1000,
            rng_seed: 0,
            weekday_partition: true,
        }
    }
}

/// A synthetic year as the list of source days, one per calendar day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticYear {
    pub index: usize,
    pub days: Vec<u32>,
}

impl SyntheticYear {
    pub fn id(&self) -> String {
        format!("y{:04}", self.index)
    }
}

pub fn is_weekend(d: NaiveDate) -> bool {
    matches!(d.weekday(), Weekday::Sat | Weekday::Sun)
}

/// Zero-based day of year, with 31 December of leap years folded onto 30 December.
pub fn day_of_year(d: NaiveDate) -> usize {
    (d.ordinal0() as usize).min(DAYS_PER_YEAR - 1)
}

/// Distance between two days of year on the circular calendar.
pub fn circular_day_gap(a: usize, b: usize) -> usize {
    let g = a.abs_diff(b) % DAYS_PER_YEAR;
    g.min(DAYS_PER_YEAR - g)
}

/// Admissible source days for each synthetic calendar day. The synthetic
/// calendar starts at the history start.
pub fn candidate_pools(history: &History, spec: &BootstrapSpec) -> Result<Vec<Vec<u32>>, Error> {
    let window = 7 * spec.window_weeks as usize;
    let hist: Vec<(usize, bool)> = (0..history.days())
        .map(|h| {
            let d = history.date_of_day(h);
            (day_of_year(d), is_weekend(d))
        })
        .collect();
    (0..DAYS_PER_YEAR)
        .map(|j| {
            let date = history.date_of_day(j);
            let (doy, weekend) = (day_of_year(date), is_weekend(date));
            let pool: Vec<u32> = hist
                .iter()
                .enumerate()
                .filter(|(_, &(hd, hw))| {
                    circular_day_gap(hd, doy) <= window && (!spec.weekday_partition || hw == weekend)
                })
                .map(|(h, _)| h as u32)
                .collect();
            if pool.is_empty() {
                Err(Error::Invalid(format!(
                    "no {} candidate within ±{} weeks of {date}",
                    if weekend { "weekend" } else { "weekday" },
                    spec.window_weeks
                )))
            } else {
                Ok(pool)
            }
        })
        .collect()
}

fn year_rng(seed: u64, year: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(year as u64);
    rng
}

/// Draws `spec.n_years` synthetic years. Each year has its own random
/// stream, so the result does not depend on the thread count.
pub fn bootstrap_years(history: &History, spec: &BootstrapSpec) -> Result<Vec<SyntheticYear>, Error> {
    history.check()?;
    if spec.block_hours != 24 {
        return Err(Error::Invalid(format!(
            "block length {} h unsupported; blocks are whole days",
            spec.block_hours
        )));
    }
    if spec.n_years == 0 {
        return Err(Error::Invalid("n_years must be positive".into()));
    }
    let pools = candidate_pools(history, spec)?;
    Ok((0..spec.n_years)
        .into_par_iter()
        .map(|y| {
            let mut rng = year_rng(spec.rng_seed, y);
            let days = pools
                .iter()
                .map(|p| p[rng.random_range(0..p.len())])
                .collect();
            SyntheticYear { index: y, days }
        })
        .collect())
}

/// Square symmetric matrix stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64 + Sync) -> Self {
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { f(i.min(j), i.max(j)) }).collect())
            .collect();
        Self {
            n,
            d: rows.concat(),
        }
    }

    /// Euclidean distances between feature vectors.
    pub fn euclidean(points: &[Vec<f64>]) -> Self {
        Self::from_fn(points.len(), |i, j| {
            points[i]
                .iter()
                .zip(&points[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

fn std_dev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return 1.0;
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    let s = var.sqrt();
    if s > 0.0 && s.is_finite() {
        s
    } else {
        1.0
    }
}

/// Squared z-normalized distances between all pairs of historical days
/// over `channels`. A channel with zero spread is left unscaled.
pub fn day_distances(history: &History, channels: &[String]) -> Result<DistanceMatrix, Error> {
    let mut scaled = Vec::with_capacity(channels.len());
    for c in channels {
        let v = history
            .channels
            .get(c)
            .ok_or_else(|| Error::Invalid(format!("history lacks channel `{c}`")))?;
        let s = std_dev(v.iter().copied());
        scaled.push(v.iter().map(|x| x / s).collect::<Vec<f64>>());
    }
    let spd = history.steps_per_day();
    Ok(DistanceMatrix::from_fn(history.days(), |a, b| {
        let mut acc = 0.0;
        for v in &scaled {
            for t in 0..spd {
                let d = v[a * spd + t] - v[b * spd + t];
                acc += d * d;
            }
        }
        acc
    }))
}

/// Euclidean distances between synthetic years from day-pair distances.
pub fn year_distances(years: &[SyntheticYear], days: &DistanceMatrix) -> DistanceMatrix {
    DistanceMatrix::from_fn(years.len(), |i, j| {
        years[i]
            .days
            .iter()
            .zip(&years[j].days)
            .map(|(&a, &b)| days.get(a as usize, b as usize))
            .sum::<f64>()
            .sqrt()
    })
}

/// Z-normalized Euclidean distances between scenarios over `channels`.
pub fn scenario_distances(scenarios: &[Scenario], channels: &[String]) -> Result<DistanceMatrix, Error> {
    let mut features: Vec<Vec<f64>> = vec![Vec::new(); scenarios.len()];
    for c in channels {
        let series: Vec<&[f64]> = scenarios
            .iter()
            .map(|s| scenario_channel(s, c))
            .collect::<Result<_, _>>()?;
        let s = std_dev(series.iter().flat_map(|v| v.iter().copied()));
        for (f, v) in features.iter_mut().zip(&series) {
            f.extend(v.iter().map(|x| x / s));
        }
    }
    Ok(DistanceMatrix::euclidean(&features))
}

/// Values of one named channel of a scenario.
pub fn scenario_channel<'a>(s: &'a Scenario, channel: &str) -> Result<&'a [f64], Error> {
    let v = match channel {
        P_EL => &s.economic.p_el,
        P_GAS => &s.economic.p_gas,
        P_CO2 => &s.economic.p_co2,
        T_AMB => &s.climate.t_amb,
        I_SOL => &s.climate.i_sol,
        _ => {
            let occ = |prefix| {
                parse_building_channel(channel, prefix).and_then(|b| s.occupant.get(&b))
            };
            if let Some(o) = occ("E_base_b") {
                &o.e_base
            } else if let Some(o) = occ("T_set_b") {
                &o.t_set
            } else {
                return Err(Error::Invalid(format!(
                    "scenario {} has no channel `{channel}`",
                    s.id
                )));
            }
        }
    };
    Ok(&v.values)
}

/// Result of a k-medoids partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// Point indices of the medoids, ascending.
    pub medoids: Vec<usize>,
    /// Cluster (position in `medoids`) of every point.
    pub assignment: Vec<usize>,
    pub counts: Vec<usize>,
    pub probabilities: Vec<f64>,
    /// Sum of distances to the assigned medoid.
    pub cost: f64,
    /// Cost after the initialization and after every accepted swap of the
    /// winning run.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMedoidsOptions {
    pub seed: u64,
    /// Extra runs from k-medoids++ seeding besides the deterministic BUILD start.
    pub restarts: usize,
}

impl Default for KMedoidsOptions {
    fn default() -> Self {
        Self { seed: 0, restarts: 4 }
    }
}

fn nearest(dist: &DistanceMatrix, medoids: &[usize], p: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, &m) in medoids.iter().enumerate() {
        let d = dist.get(p, m);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn total_cost(dist: &DistanceMatrix, medoids: &[usize]) -> f64 {
    (0..dist.len()).map(|p| nearest(dist, medoids, p).1).sum()
}

/// Greedy BUILD: each new medoid is the point that lowers the cost most.
fn build_init(dist: &DistanceMatrix, k: usize) -> Vec<usize> {
    let n = dist.len();
    let mut medoids = Vec::with_capacity(k);
    let mut near = vec![f64::INFINITY; n];
    for _ in 0..k {
        let mut best = (usize::MAX, f64::INFINITY);
        for c in (0..n).filter(|c| !medoids.contains(c)) {
            let cost: f64 = (0..n).map(|p| near[p].min(dist.get(p, c))).sum();
            if cost < best.1 {
                best = (c, cost);
            }
        }
        medoids.push(best.0);
        for (p, v) in near.iter_mut().enumerate() {
            *v = v.min(dist.get(p, best.0));
        }
    }
    medoids
}

/// k-medoids++ seeding: first medoid uniform, the rest with probability
/// proportional to the squared distance to the nearest chosen medoid.
fn plusplus_init(dist: &DistanceMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = dist.len();
    let mut medoids = vec![rng.random_range(0..n)];
    let mut near: Vec<f64> = (0..n).map(|p| dist.get(p, medoids[0])).collect();
    while medoids.len() < k {
        let w: Vec<f64> = near.iter().map(|d| d * d).collect();
        let total: f64 = w.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = None;
            for (p, &wp) in w.iter().enumerate() {
                if wp > 0.0 {
                    pick = Some(p);
                    if u < wp {
                        break;
                    }
                    u -= wp;
                }
            }
            pick.expect("positive total weight")
        } else {
            (0..n).find(|p| !medoids.contains(p)).expect("k <= n")
        };
        medoids.push(pick);
        for (p, v) in near.iter_mut().enumerate() {
            *v = v.min(dist.get(p, pick));
        }
    }
    medoids
}

/// Steepest-descent swaps until no single swap lowers the cost.
fn swap_descent(dist: &DistanceMatrix, medoids: &mut Vec<usize>) -> Vec<f64> {
    let n = dist.len();
    let k = medoids.len();
    let mut trace = vec![total_cost(dist, medoids)];
    loop {
        // nearest and second-nearest distance of every point
        let mut d1 = vec![f64::INFINITY; n];
        let mut d2 = vec![f64::INFINITY; n];
        let mut c1 = vec![0usize; n];
        for p in 0..n {
            for (c, &m) in medoids.iter().enumerate() {
                let d = dist.get(p, m);
                if d < d1[p] {
                    d2[p] = d1[p];
                    d1[p] = d;
                    c1[p] = c;
                } else if d < d2[p] {
                    d2[p] = d;
                }
            }
        }
        let current = *trace.last().unwrap();
        let best = (0..n)
            .into_par_iter()
            .filter(|o| !medoids.contains(o))
            .map(|o| {
                let mut best = (f64::INFINITY, 0usize);
                for i in 0..k {
                    let mut cost = 0.0;
                    for p in 0..n {
                        let dpo = dist.get(p, o);
                        let keep = if c1[p] == i { d2[p] } else { d1[p] };
                        cost += dpo.min(keep);
                    }
                    if cost < best.0 {
                        best = (cost, i);
                    }
                }
                (best.0, o, best.1)
            })
            .reduce(
                || (f64::INFINITY, usize::MAX, usize::MAX),
                |a, b| if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) { b } else { a },
            );
        let tol = 1e-12 * current.abs().max(1.0);
        if best.1 == usize::MAX || best.0 >= current - tol {
            return trace;
        }
        medoids[best.2] = best.1;
        trace.push(total_cost(dist, medoids));
    }
}

/// Work limit, in point-to-medoid evaluations, below which every medoid set
/// is tried.
const EXACT_BUDGET: f64 = 2.0e6;

/// Best medoid set by full enumeration, or `None` when the instance is too
/// large. Swap descent can stall on plateaus of tied distances; small
/// instances are cheap enough to settle exactly.
fn enumerate_small(dist: &DistanceMatrix, k: usize) -> Option<Vec<usize>> {
    let n = dist.len();
    let subsets = (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    if subsets * (n * k) as f64 > EXACT_BUDGET {
        return None;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut best = (f64::INFINITY, idx.clone());
    loop {
        let cost = total_cost(dist, &idx);
        if cost < best.0 {
            best = (cost, idx.clone());
        }
        // next combination in lexicographic order
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return Some(best.1);
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// `counts[i] / total`, with the last weight taken as the remainder so the
/// weights summed in order give exactly 1.
pub fn count_weights(counts: &[usize]) -> Vec<f64> {
    let n: usize = counts.iter().sum();
    let mut w: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    if let Some((last, head)) = w.split_last_mut() {
        *last = 1.0 - head.iter().sum::<f64>();
    }
    w
}

/// PAM k-medoids with a BUILD start plus `restarts` k-medoids++ starts;
/// the lowest cost wins, earlier runs on ties. Small instances are also
/// enumerated, which replaces the PAM result only when strictly cheaper.
pub fn kmedoids(dist: &DistanceMatrix, k: usize, opts: &KMedoidsOptions) -> Result<ClusterResult, Error> {
    let n = dist.len();
    if k == 0 {
        return Err(Error::Invalid("k must be positive".into()));
    }
    if k > n {
        return Err(Error::Invalid(format!("k = {k} exceeds the {n} points")));
    }
    let mut best: Option<(Vec<usize>, Vec<f64>)> = None;
    for run in 0..=opts.restarts {
        let mut medoids = if run == 0 {
            build_init(dist, k)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(run as u64);
            plusplus_init(dist, k, &mut rng)
        };
        let trace = swap_descent(dist, &mut medoids);
        let better = match &best {
            None => true,
            Some((_, t)) => *trace.last().unwrap() < *t.last().unwrap(),
        };
        if better {
            best = Some((medoids, trace));
        }
    }
    let (mut medoids, mut trace) = best.expect("at least one run");
    if let Some(exact) = enumerate_small(dist, k) {
        let cost = total_cost(dist, &exact);
        if cost < *trace.last().unwrap() {
            medoids = exact;
            trace.push(cost);
        }
    }
    medoids.sort_unstable();
    let mut assignment = Vec::with_capacity(n);
    let mut counts = vec![0usize; k];
    let mut cost = 0.0;
    for p in 0..n {
        // a medoid always belongs to its own cluster, even with duplicates
        let (c, d) = match medoids.iter().position(|&m| m == p) {
            Some(c) => (c, 0.0),
            None => nearest(dist, &medoids, p),
        };
        assignment.push(c);
        counts[c] += 1;
        cost += d;
    }
    let probabilities = count_weights(&counts);
    Ok(ClusterResult {
        medoids,
        assignment,
        counts,
        probabilities,
        cost,
        trace,
    })
}

/// Scenario-set output of a reduction: the medoid years with their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedSet {
    pub years: Vec<SyntheticYear>,
    pub probabilities: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Clusters the years over all history channels and keeps the medoids.
pub fn reduce_scenarios(
    history: &History,
    years: &[SyntheticYear],
    k: usize,
    opts: &KMedoidsOptions,
) -> Result<ReducedSet, Error> {
    let channels: Vec<String> = history.channels.keys().cloned().collect();
    let days = day_distances(history, &channels)?;
    let dist = year_distances(years, &days);
    let c = kmedoids(&dist, k, opts)?;
    Ok(ReducedSet {
        years: c.medoids.iter().map(|&m| years[m].clone()).collect(),
        probabilities: c.probabilities,
        counts: c.counts,
    })
}

/// Index of the scenario that best represents the set over `channels`.
pub fn nominal_index(scenarios: &[Scenario], channels: &[String]) -> Result<usize, Error> {
    if scenarios.is_empty() {
        return Err(Error::Invalid("no scenarios to pick a nominal from".into()));
    }
    let dist = scenario_distances(scenarios, channels)?;
    let c = kmedoids(&dist, 1, &KMedoidsOptions { seed: 0, restarts: 0 })?;
    Ok(c.medoids[0])
}

/// Index of the scenario whose non-`factor` profiles serve as nominal when
/// `factor` is varied.
pub fn nominal_scenario(scenarios: &[Scenario], factor: Factor) -> Result<usize, Error> {
    let buildings: Vec<usize> = scenarios
        .first()
        .map(|s| s.occupant.keys().copied().collect())
        .unwrap_or_default();
    nominal_index(scenarios, &factor.complement_channels(&buildings))
}

/// Copy of `base` with the profiles of `factor` taken from `source`.
pub fn replace_factor(base: &Scenario, source: &Scenario, factor: Factor) -> Scenario {
    let mut s = base.clone();
    match factor {
        Factor::Occ => s.occupant = source.occupant.clone(),
        Factor::Eco => s.economic = source.economic.clone(),
        Factor::Clim => s.climate = source.climate.clone(),
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComposeMode {
    Stochastic,
    OneAtATime,
}

/// One problem instance of a sensitivity study.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorCase {
    /// `None` for the joint stochastic set.
    pub factor: Option<Factor>,
    /// Id of the member whose profiles are varied.
    pub member: Option<String>,
    pub scenarios: Vec<Scenario>,
}

/// Stochastic mode returns the joint set unchanged. One-at-a-time mode
/// returns, for each factor and each member, a single scenario combining
/// that member's factor profiles with the nominal profiles of the others.
pub fn compose_factor_scenarios(joint: &[Scenario], mode: ComposeMode) -> Result<Vec<FactorCase>, Error> {
    if joint.is_empty() {
        return Err(Error::Invalid("no scenarios to compose".into()));
    }
    match mode {
        ComposeMode::Stochastic => Ok(vec![FactorCase {
            factor: None,
            member: None,
            scenarios: joint.to_vec(),
        }]),
        ComposeMode::OneAtATime => {
            let mut out = Vec::with_capacity(3 * joint.len());
            for f in Factor::ALL {
                let nominal = &joint[nominal_scenario(joint, f)?];
                for m in joint {
                    let mut s = replace_factor(nominal, m, f);
                    s.id = format!("{}_{}", f.name(), m.id);
                    s.probability = 1.0;
                    out.push(FactorCase {
                        factor: Some(f),
                        member: Some(m.id.clone()),
                        scenarios: vec![s],
                    });
                }
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(points: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(points.len(), |i, j| (points[i] - points[j]).abs())
    }

    #[test]
    fn one_medoid_of_skewed_line_ties_to_lowest_index() {
        // points 1 and 2 both total 11
        let c = kmedoids(&line(&[0.0, 1.0, 2.0, 10.0]), 1, &KMedoidsOptions::default()).unwrap();
        assert_eq!(c.medoids, vec![1]);
        assert_eq!(c.cost, 11.0);
    }

    #[test]
    fn saturated_k_gives_uniform_weights() {
        let c = kmedoids(&line(&[3.0, 1.0, 4.0, 1.5]), 4, &KMedoidsOptions::default()).unwrap();
        assert_eq!(c.medoids, vec![0, 1, 2, 3]);
        assert!(c.probabilities.iter().all(|&p| p == 0.25));
    }

    #[test]
    fn duplicates_tie_to_lowest_index() {
        let c = kmedoids(&line(&[5.0, 5.0, 5.0]), 1, &KMedoidsOptions::default()).unwrap();
        assert_eq!(c.medoids, vec![0]);
    }

    #[test]
    fn bad_k_is_rejected() {
        assert!(kmedoids(&line(&[1.0]), 0, &KMedoidsOptions::default()).is_err());
        assert!(kmedoids(&line(&[1.0]), 2, &KMedoidsOptions::default()).is_err());
    }

    #[test]
    fn calendar_gap_wraps() {
        assert_eq!(circular_day_gap(2, 362), 5);
        assert_eq!(circular_day_gap(100, 100), 0);
        assert_eq!(circular_day_gap(0, 182), 182);
    }
}
