//! Files on disk: synthetic fixtures, community ingestion, scenario
//! directories, plan reports and run manifests.
//!
//! Numbers are written in the shortest form that parses back to the same
//! `f64`, so every file round-trips exactly.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{Duration, NaiveDateTime, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::orchestrator::{PlanResult, SensitivityReport};
use crate::scenario::{
    e_base_channel, is_weekend, scenario_channel, t_set_channel, BootstrapSpec, History,
    SyntheticYear, I_SOL, P_CO2, P_EL, P_GAS, T_AMB,
};
use crate::types::{
    validate_config, BuildingConfig, Climate, CommunityConfig, DeviceKind, DeviceSpec, Economic,
    Occupant, RcParameters, Scenario, TimeSeries,
};
use crate::Error;

pub const COMMUNITY_FILE: &str = "community.json";
pub const RC_CATALOGUE_FILE: &str = "rc_catalogue.json";
pub const DEVICE_CATALOGUE_FILE: &str = "device_catalogue.json";
pub const HISTORY_DIR: &str = "history";
pub const SCENARIO_MANIFEST_FILE: &str = "manifest.json";
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

const GLOBAL_CHANNELS: [&str; 5] = [P_EL, P_GAS, P_CO2, T_AMB, I_SOL];

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, Error> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::parse(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<(), Error> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, Error> {
    csv::Writer::from_path(path).map_err(|e| Error::parse(path, e))
}

fn write_row(w: &mut csv::Writer<fs::File>, path: &Path, row: &[String]) -> Result<(), Error> {
    w.write_record(row).map_err(|e| Error::parse(path, e))
}

fn finish(mut w: csv::Writer<fs::File>, path: &Path) -> Result<(), Error> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn timestamp(start: NaiveDateTime, step_hours: f64, t: usize) -> String {
    let at = start + Duration::seconds((t as f64 * step_hours * 3600.0).round() as i64);
    at.format(TIMESTAMP_FORMAT).to_string()
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s.trim(), TIMESTAMP_FORMAT).ok()
}

// ---------------------------------------------------------------------------
// Community files

/// A catalogue entry given by name or spelled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ref<T> {
    Name(String),
    Inline(T),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingFile {
    pub id: usize,
    pub rc: Ref<RcParameters>,
    pub roof_area: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comfort_buffer: Option<f64>,
    #[serde(default)]
    pub devices: Vec<Ref<DeviceSpec>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityFile {
    pub buildings: Vec<BuildingFile>,
    #[serde(default)]
    pub community_devices: Vec<Ref<DeviceSpec>>,
    pub lv_limit: f64,
    pub mv_limit: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slack_price: Option<f64>,
    pub discount_rate: f64,
    pub horizon_steps: usize,
    pub step_hours: f64,
}

fn resolve<T: Clone>(
    r: &Ref<T>,
    catalogue: &BTreeMap<String, T>,
    file: &Path,
    what: &str,
) -> Result<T, Error> {
    match r {
        Ref::Inline(v) => Ok(v.clone()),
        Ref::Name(n) => catalogue
            .get(n)
            .cloned()
            .ok_or_else(|| Error::parse(file, format!("unknown {what} `{n}`"))),
    }
}

fn read_catalogue<T: DeserializeOwned>(path: &Path) -> Result<BTreeMap<String, T>, Error> {
    if path.exists() {
        read_json(path)
    } else {
        Ok(BTreeMap::new())
    }
}

/// Reads and validates the community configuration of a data directory.
pub fn read_config(dir: &Path) -> Result<CommunityConfig, Error> {
    let cfg_path = dir.join(COMMUNITY_FILE);
    let file: CommunityFile = read_json(&cfg_path)?;
    let rcs: BTreeMap<String, RcParameters> = read_catalogue(&dir.join(RC_CATALOGUE_FILE))?;
    let devs: BTreeMap<String, DeviceSpec> = read_catalogue(&dir.join(DEVICE_CATALOGUE_FILE))?;
    let mut buildings = Vec::with_capacity(file.buildings.len());
    for b in &file.buildings {
        buildings.push(BuildingConfig {
            id: b.id,
            rc: resolve(&b.rc, &rcs, &cfg_path, "RC entry")?,
            roof_area: b.roof_area,
            comfort_buffer: b.comfort_buffer.unwrap_or(0.5),
            devices: b
                .devices
                .iter()
                .map(|d| resolve(d, &devs, &cfg_path, "device"))
                .collect::<Result<_, _>>()?,
        });
    }
    let cfg = CommunityConfig {
        buildings,
        community_devices: file
            .community_devices
            .iter()
            .map(|d| resolve(d, &devs, &cfg_path, "device"))
            .collect::<Result<_, _>>()?,
        lv_limit: file.lv_limit,
        mv_limit: file.mv_limit,
        slack_price: file.slack_price.unwrap_or(1e5),
        discount_rate: file.discount_rate,
        horizon_steps: file.horizon_steps,
        step_hours: file.step_hours,
    };
    let bad = validate_config(&cfg);
    if !bad.is_empty() {
        let list: Vec<String> = bad.iter().map(ToString::to_string).collect();
        return Err(Error::parse(&cfg_path, list.join("; ")));
    }
    Ok(cfg)
}

/// Reads one `timestamp,value` history file. Extra columns are reported
/// in `warnings` and ignored.
pub fn read_series_csv(path: &Path, warnings: &mut Vec<String>) -> Result<(NaiveDateTime, f64, Vec<f64>), Error> {
    if !path.exists() {
        return Err(Error::parse(path, "history file is missing"));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::parse(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::parse(path, e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (ts_col, v_col) = match (col("timestamp"), col("value")) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::parse(path, "line 1: header needs `timestamp` and `value`")),
    };
    for h in headers.iter().filter(|h| *h != "timestamp" && *h != "value") {
        warnings.push(format!("{}: ignoring unknown column `{h}`", path.display()));
    }
    let mut stamps = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(path, format!("line {line}: {e}")))?;
        let ts = rec
            .get(ts_col)
            .and_then(parse_timestamp)
            .ok_or_else(|| Error::parse(path, format!("line {line}: bad timestamp")))?;
        let v: f64 = rec
            .get(v_col)
            .and_then(|s| s.parse().ok())
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| Error::parse(path, format!("line {line}: bad value")))?;
        stamps.push(ts);
        values.push(v);
    }
    if stamps.len() < 2 {
        return Err(Error::parse(path, "needs at least two rows"));
    }
    let step = stamps[1] - stamps[0];
    for (i, w) in stamps.windows(2).enumerate() {
        if w[1] - w[0] != step {
            return Err(Error::parse(path, format!("line {}: irregular time step", i + 3)));
        }
    }
    let step_hours = step.num_seconds() as f64 / 3600.0;
    if step_hours <= 0.0 {
        return Err(Error::parse(path, "timestamps must increase"));
    }
    Ok((stamps[0], step_hours, values))
}

/// Configuration and history of a data directory.
#[derive(Debug, Clone)]
pub struct Ingested {
    pub config: CommunityConfig,
    pub history: History,
    pub warnings: Vec<String>,
}

pub fn read_history(dir: &Path, buildings: &[usize], warnings: &mut Vec<String>) -> Result<History, Error> {
    let hdir = dir.join(HISTORY_DIR);
    let mut names: Vec<String> = GLOBAL_CHANNELS.iter().map(|s| s.to_string()).collect();
    for &b in buildings {
        names.push(e_base_channel(b));
        names.push(t_set_channel(b));
    }
    let mut channels = BTreeMap::new();
    let mut grid: Option<(NaiveDateTime, f64, PathBuf)> = None;
    for name in names {
        let path = hdir.join(format!("{name}.csv"));
        let (start, step, values) = read_series_csv(&path, warnings)?;
        match &grid {
            None => grid = Some((start, step, path.clone())),
            Some((s0, st0, p0)) if *s0 != start || *st0 != step => {
                return Err(Error::parse(
                    &path,
                    format!("time grid differs from {}", p0.display()),
                ))
            }
            _ => {}
        }
        channels.insert(name, values);
    }
    let (start, step, _) = grid.expect("at least the global channels");
    History::new(start, step, channels)
}

/// Reads configuration, catalogues and histories of a data directory.
pub fn ingest_community(dir: &Path) -> Result<Ingested, Error> {
    let config = read_config(dir)?;
    let ids: Vec<usize> = config.buildings.iter().map(|b| b.id).collect();
    let mut warnings = Vec::new();
    let history = read_history(dir, &ids, &mut warnings)?;
    if (history.step_hours - config.step_hours).abs() > 1e-12 {
        return Err(Error::parse(
            dir.join(COMMUNITY_FILE),
            format!(
                "step_hours {} differs from the history step {}",
                config.step_hours, history.step_hours
            ),
        ));
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Ingested {
        config,
        history,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Synthetic fixture

fn device_catalogue() -> BTreeMap<String, DeviceSpec> {
    let spec = |kind, min, max, a, b, tau| {
        let mut d = DeviceSpec::new(kind, min, max);
        d.a = a;
        d.b = b;
        d.tau = tau;
        d
    };
    let storage = |mut d: DeviceSpec, eta: f64, sigma: f64, gamma: f64| {
        d.eta_ch = eta;
        d.eta_dch = eta;
        d.sigma = sigma;
        d.gamma_ch = gamma;
        d.gamma_dch = gamma;
        d
    };
    let mut el = spec(DeviceKind::EL, 0.0, 50.0, 1000.0, 10000.0, 15.0);
    el.eta_ch = 0.7;
    let mut fc = spec(DeviceKind::FC, 0.0, 50.0, 1500.0, 10000.0, 15.0);
    fc.eta_dch = 0.5;
    let entries = [
        spec(DeviceKind::BOL, 2.0, 30.0, 100.0, 2000.0, 20.0).with_extra("eta_BOL", 0.97),
        spec(DeviceKind::HP, 0.0, 15.0, 800.0, 4000.0, 20.0)
            .with_extra("alpha_HP_1", 5.8)
            .with_extra("alpha_HP_2", -0.024)
            .with_extra("alpha_HP_3", 0.8)
            .with_extra("alpha_HP_4", -0.01)
            .with_extra("T_dist", 45.0),
        storage(spec(DeviceKind::TES, 0.0, 20.0, 50.0, 500.0, 20.0), 0.95, 0.99, 0.5),
        storage(spec(DeviceKind::BAT, 0.0, 20.0, 500.0, 1000.0, 15.0), 0.95, 0.999, 0.5),
        spec(DeviceKind::PV, 0.0, 40.0, 200.0, 1000.0, 25.0).with_extra("eta_PV", 0.2),
        spec(DeviceKind::STC, 0.0, 40.0, 300.0, 1500.0, 20.0)
            .with_extra("eta_STC", 0.7)
            .with_extra("U_STC", 4.0)
            .with_extra("T_STC", 50.0),
        spec(DeviceKind::PV_COM, 0.0, 500.0, 150.0, 5000.0, 25.0).with_extra("eta_PV", 0.2),
        storage(spec(DeviceKind::BAT_COM, 0.0, 200.0, 400.0, 5000.0, 15.0), 0.95, 0.999, 0.5),
        el,
        spec(DeviceKind::HYD, 0.0, 2000.0, 15.0, 5000.0, 25.0),
        fc,
    ];
    entries
        .into_iter()
        .map(|d| (d.kind.name().to_string(), d))
        .collect()
}

/// RC network of the given order (1–5) scaled by `f` per parameter.
fn fixture_rc(order: u8, f: &mut impl FnMut() -> f64) -> RcParameters {
    let mut resistances = BTreeMap::from([("R_ia".to_string(), 0.0067 * f())]);
    let mut capacities = BTreeMap::from([("C_i".to_string(), 2.0e7 * f())]);
    let nodes: [(&str, f64, &str, f64); 4] = [
        ("C_e", 3.0e7, "R_ie", 0.004),
        ("C_h", 2.0e6, "R_ih", 0.003),
        ("C_s", 1.0e6, "R_is", 0.01),
        ("C_m", 1.0e7, "R_im", 0.002),
    ];
    for &(c, cv, r, rv) in nodes.iter().take(order as usize - 1) {
        capacities.insert(c.to_string(), cv * f());
        resistances.insert(r.to_string(), rv * f());
    }
    if order >= 2 {
        resistances.insert("R_ea".to_string(), 0.01 * f());
    }
    RcParameters {
        order,
        resistances,
        capacities,
        a_w: 4.0 * f(),
        a_e: if order >= 2 { 10.0 * f() } else { 0.0 },
    }
}

fn round4(x: f64) -> f64 {
    (x * 1e4).round() / 1e4
}

/// Writes a synthetic community of `n` buildings: configuration,
/// catalogues and one year of hourly history starting 2021-01-01. The
/// output depends only on `(n, seed)`.
pub fn generate_fixture(dir: &Path, n: usize, seed: u64) -> Result<(), Error> {
    if n == 0 {
        return Err(Error::Invalid("a fixture needs at least one building".into()));
    }
    create_dir(&dir.join(HISTORY_DIR))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut rcs = BTreeMap::new();
    let mut buildings = Vec::with_capacity(n);
    let building_devices = ["BOL", "HP", "TES", "BAT", "PV", "STC"];
    for id in 1..=n {
        let order = (((id - 1) % 5) + 1) as u8;
        let mut f = || 0.8 + 0.4 * rng.random::<f64>();
        let rc = fixture_rc(order, &mut f);
        let key = format!("b{id}");
        rcs.insert(key.clone(), rc);
        buildings.push(BuildingFile {
            id,
            rc: Ref::Name(key),
            roof_area: (30.0 + 30.0 * rng.random::<f64>()).round(),
            comfort_buffer: Some(0.5),
            devices: building_devices.iter().map(|d| Ref::Name(d.to_string())).collect(),
        });
    }
    let file = CommunityFile {
        buildings,
        community_devices: ["PV_COM", "BAT_COM", "EL", "HYD", "FC"]
            .iter()
            .map(|d| Ref::Name(d.to_string()))
            .collect(),
        lv_limit: 17.0,
        mv_limit: (8.0 * n as f64).max(50.0),
        slack_price: Some(1e5),
        discount_rate: 0.05,
        horizon_steps: 168,
        step_hours: 1.0,
    };
    write_json(&dir.join(COMMUNITY_FILE), &file)?;
    write_json(&dir.join(RC_CATALOGUE_FILE), &rcs)?;
    write_json(&dir.join(DEVICE_CATALOGUE_FILE), &device_catalogue())?;

    let hours = crate::scenario::DAYS_PER_YEAR * 24;
    let t0 = chrono::NaiveDate::from_ymd_opt(2021, 1, 1)
        .expect("valid date")
        .and_hms_opt(0, 0, 0)
        .expect("valid time");
    let mut channels: BTreeMap<String, Vec<f64>> = BTreeMap::new();

    // Day-level random factors shared by all hours of a day.
    let days = hours / 24;
    let cloud: Vec<f64> = (0..days).map(|_| 0.3 + 0.7 * rng.random::<f64>()).collect();
    let warm: Vec<f64> = (0..days).map(|_| 4.0 * (rng.random::<f64>() - 0.5)).collect();
    let gas_day: Vec<f64> = (0..days).map(|_| 0.01 * (rng.random::<f64>() - 0.5)).collect();
    let el_day: Vec<f64> = (0..days).map(|_| 0.06 * (rng.random::<f64>() - 0.5)).collect();

    let mut t_amb = Vec::with_capacity(hours);
    let mut i_sol = Vec::with_capacity(hours);
    let mut p_el = Vec::with_capacity(hours);
    let mut p_gas = Vec::with_capacity(hours);
    let mut p_co2 = Vec::with_capacity(hours);
    for t in 0..hours {
        let day = t / 24;
        let hour = (t % 24) as f64;
        let season = (2.0 * PI * (day as f64 - 15.0) / 365.0).cos(); // 1 in mid-January
        let diurnal = (2.0 * PI * (hour - 15.0) / 24.0).cos(); // 1 at 15:00
        t_amb.push(round4(10.0 - 7.0 * season + 3.5 * diurnal + warm[day] + (rng.random::<f64>() - 0.5)));
        let daylight = (PI * (hour - 6.0) / 12.0).sin().max(0.0);
        i_sol.push(round4(daylight * (450.0 - 300.0 * season) * cloud[day]));
        let peaks = (-((hour - 8.0) / 2.0).powi(2)).exp() + 1.3 * (-((hour - 19.0) / 2.5).powi(2)).exp();
        p_el.push(round4(0.18 + 0.04 * season + 0.10 * peaks + el_day[day] + 0.01 * (rng.random::<f64>() - 0.5)));
        p_gas.push(round4(0.09 + 0.015 * season + gas_day[day]));
        p_co2.push(round4(0.018 + 0.002 * (rng.random::<f64>() - 0.5)));
    }
    channels.insert(T_AMB.into(), t_amb);
    channels.insert(I_SOL.into(), i_sol);
    channels.insert(P_EL.into(), p_el);
    channels.insert(P_GAS.into(), p_gas);
    channels.insert(P_CO2.into(), p_co2);

    for id in 1..=n {
        let base = 0.2 + 0.3 * rng.random::<f64>();
        let high = 19.0 + (rng.random::<f64>() * 2.0).round() * 0.5;
        let wake = 6.0 + (rng.random::<f64>() * 2.0).round();
        let mut e = Vec::with_capacity(hours);
        let mut s = Vec::with_capacity(hours);
        for t in 0..hours {
            let date = t0 + Duration::hours(t as i64);
            let hour = date.hour() as f64;
            let weekend = is_weekend(date.date());
            let morning = (-((hour - (wake + 1.0)) / 1.5).powi(2)).exp();
            let evening = (-((hour - 19.0) / 2.0).powi(2)).exp();
            let load = base * (1.0 + 1.5 * evening + if weekend { 1.0 } else { 0.8 } * morning)
                * (0.85 + 0.3 * rng.random::<f64>());
            e.push(round4(load));
            let (on, off) = if weekend { (wake + 1.0, 23.0) } else { (wake, 22.0) };
            s.push(if hour >= on && hour < off { high } else { 17.0 });
        }
        channels.insert(e_base_channel(id), e);
        channels.insert(t_set_channel(id), s);
    }

    for (name, values) in &channels {
        let path = dir.join(HISTORY_DIR).join(format!("{name}.csv"));
        let mut w = csv_writer(&path)?;
        write_row(&mut w, &path, &["timestamp".into(), "value".into()])?;
        for (t, v) in values.iter().enumerate() {
            write_row(&mut w, &path, &[timestamp(t0, 1.0, t), v.to_string()])?;
        }
        finish(w, &path)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Scenario directories

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioEntry {
    pub id: String,
    pub probability: f64,
    /// Number of bootstrapped years represented, when reduced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Profile file relative to the directory; absent for provenance-only sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    /// Source history day of every synthetic day.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_days: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioManifest {
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduced_to: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history_sha256: Option<String>,
    pub buildings: Vec<usize>,
    pub start: NaiveDateTime,
    pub step_hours: f64,
    pub scenarios: Vec<ScenarioEntry>,
}

impl ScenarioManifest {
    /// Bootstrapped years as provenance (no profile files).
    pub fn years(&self) -> Result<Vec<SyntheticYear>, Error> {
        self.scenarios
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let days = e.source_days.clone().ok_or_else(|| {
                    Error::Invalid(format!("scenario {} has no source days", e.id))
                })?;
                Ok(SyntheticYear { index: i, days })
            })
            .collect()
    }
}

/// Digest over all history values, in channel order.
pub fn history_digest(h: &History) -> String {
    let mut hasher = Sha256::new();
    for (name, values) in &h.channels {
        hasher.update(name.as_bytes());
        for v in values {
            hasher.update(v.to_le_bytes());
        }
    }
    format!("{:x}", hasher.finalize())
}

fn scenario_columns(buildings: &[usize]) -> Vec<String> {
    let mut cols: Vec<String> = GLOBAL_CHANNELS.iter().map(|s| s.to_string()).collect();
    for &b in buildings {
        cols.push(e_base_channel(b));
        cols.push(t_set_channel(b));
    }
    cols
}

fn write_scenario_csv(path: &Path, s: &Scenario, buildings: &[usize]) -> Result<(), Error> {
    let cols = scenario_columns(buildings);
    let series: Vec<&[f64]> = cols
        .iter()
        .map(|c| scenario_channel(s, c))
        .collect::<Result<_, _>>()?;
    let mut w = csv_writer(path)?;
    let mut header = vec!["timestamp".to_string()];
    header.extend(cols.iter().cloned());
    write_row(&mut w, path, &header)?;
    let start = s.economic.p_el.start;
    let step = s.step_hours();
    for t in 0..s.len() {
        let mut row = Vec::with_capacity(cols.len() + 1);
        row.push(timestamp(start, step, t));
        row.extend(series.iter().map(|v| v[t].to_string()));
        write_row(&mut w, path, &row)?;
    }
    finish(w, path)
}

fn read_scenario_csv(path: &Path, entry: &ScenarioEntry, buildings: &[usize], start: NaiveDateTime, step: f64) -> Result<Scenario, Error> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::parse(path, e))?;
    let headers = rdr.headers().map_err(|e| Error::parse(path, e))?.clone();
    let cols = scenario_columns(buildings);
    let idx: Vec<usize> = cols
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| Error::parse(path, format!("missing column `{c}`")))
        })
        .collect::<Result<_, _>>()?;
    let mut data: Vec<Vec<f64>> = vec![Vec::new(); cols.len()];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, format!("line {}: {e}", i + 2)))?;
        for (k, &j) in idx.iter().enumerate() {
            let v: f64 = rec
                .get(j)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(path, format!("line {}: bad `{}`", i + 2, cols[k])))?;
            data[k].push(v);
        }
    }
    let mut by_name: BTreeMap<String, Vec<f64>> = cols.into_iter().zip(data).collect();
    let mut ts = |c: &str| TimeSeries {
        start,
        step_hours: step,
        values: by_name.remove(c).unwrap_or_default(),
        unit: crate::scenario::channel_unit(c).expect("known channel"),
    };
    let economic = Economic {
        p_el: ts(P_EL),
        p_gas: ts(P_GAS),
        p_co2: ts(P_CO2),
    };
    let climate = Climate {
        t_amb: ts(T_AMB),
        i_sol: ts(I_SOL),
    };
    let occupant = buildings
        .iter()
        .map(|&b| {
            (
                b,
                Occupant {
                    e_base: ts(&e_base_channel(b)),
                    t_set: ts(&t_set_channel(b)),
                },
            )
        })
        .collect();
    let s = Scenario {
        id: entry.id.clone(),
        probability: entry.probability,
        occupant,
        economic,
        climate,
    };
    s.check().map_err(|e| Error::parse(path, e))?;
    Ok(s)
}

/// Writes profiles (one wide CSV per scenario) and the manifest. The
/// entries' `file` fields are filled in.
pub fn write_scenario_dir(dir: &Path, scenarios: &[Scenario], mut manifest: ScenarioManifest) -> Result<ScenarioManifest, Error> {
    create_dir(dir)?;
    if manifest.scenarios.len() != scenarios.len() {
        return Err(Error::Invalid("manifest and scenarios differ in count".into()));
    }
    for (s, e) in scenarios.iter().zip(manifest.scenarios.iter_mut()) {
        let file = format!("{}.csv", s.id);
        write_scenario_csv(&dir.join(&file), s, &manifest.buildings)?;
        e.file = Some(file);
    }
    write_json(&dir.join(SCENARIO_MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

/// Writes a manifest only (provenance of bootstrapped years).
pub fn write_scenario_manifest(dir: &Path, manifest: &ScenarioManifest) -> Result<(), Error> {
    create_dir(dir)?;
    write_json(&dir.join(SCENARIO_MANIFEST_FILE), manifest)
}

pub fn read_scenario_manifest(dir: &Path) -> Result<ScenarioManifest, Error> {
    read_json(&dir.join(SCENARIO_MANIFEST_FILE))
}

/// Reads every scenario with a profile file.
pub fn read_scenario_dir(dir: &Path) -> Result<(Vec<Scenario>, ScenarioManifest), Error> {
    let m = read_scenario_manifest(dir)?;
    let mut out = Vec::with_capacity(m.scenarios.len());
    for e in &m.scenarios {
        let file = e.file.as_ref().ok_or_else(|| {
            Error::parse(
                dir.join(SCENARIO_MANIFEST_FILE),
                format!("scenario {} has no profile file; reduce the set first", e.id),
            )
        })?;
        out.push(read_scenario_csv(&dir.join(file), e, &m.buildings, m.start, m.step_hours)?);
    }
    Ok((out, m))
}

// ---------------------------------------------------------------------------
// Reports

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

impl FileHash {
    pub fn of(path: &Path) -> Result<Self, Error> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        })
    }
}

/// Everything needed to replay a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: Vec<String>,
    #[serde(default)]
    pub inputs: Vec<FileHash>,
    pub solver: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub started: String,
    pub finished: String,
    pub wall_s: f64,
}

impl RunManifest {
    /// Inputs whose current hash differs from the recorded one.
    pub fn stale_inputs(&self) -> Vec<String> {
        self.inputs
            .iter()
            .filter(|h| sha256_file(Path::new(&h.path)).map_or(true, |s| s != h.sha256))
            .map(|h| h.path.clone())
            .collect()
    }
}

pub const PLAN_FILE: &str = "plan_result.json";
pub const BREAKDOWN_FILE: &str = "breakdown.json";
pub const DESIGNS_FILE: &str = "designs.csv";
pub const TRACES_FILE: &str = "traces.csv";
pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";
pub const SENSITIVITY_FILE: &str = "sensitivity_report.json";
pub const SPREAD_FILE: &str = "spread.csv";

/// Writes the plan, its cost breakdown, the design table and the
/// per-step traces (one row per scenario, building and step).
pub fn emit_reports(plan: &PlanResult, out: &Path) -> Result<Vec<PathBuf>, Error> {
    let gap = plan.breakdown.identity_gap();
    if gap > 1e-9 {
        return Err(Error::Invalid(format!("cost breakdown does not add up (gap {gap:e})")));
    }
    create_dir(out)?;
    let plan_path = out.join(PLAN_FILE);
    write_json(&plan_path, plan)?;
    let breakdown_path = out.join(BREAKDOWN_FILE);
    write_json(&breakdown_path, &plan.breakdown)?;

    let designs_path = out.join(DESIGNS_FILE);
    let mut w = csv_writer(&designs_path)?;
    write_row(&mut w, &designs_path, &["entity".into(), "device".into(), "chi".into(), "value".into()])?;
    for d in &plan.designs {
        write_row(
            &mut w,
            &designs_path,
            &[d.entity.clone(), d.device.to_string(), d.chi.to_string(), d.value.to_string()],
        )?;
    }
    finish(w, &designs_path)?;

    let traces_path = out.join(TRACES_FILE);
    let mut w = csv_writer(&traces_path)?;
    write_row(
        &mut w,
        &traces_path,
        &["scenario", "building", "t", "T_i", "Q_SP", "E_in", "E_out", "gas"].map(String::from),
    )?;
    for op in &plan.operations {
        for b in &op.buildings {
            for t in 0..b.t_i.len() {
                write_row(
                    &mut w,
                    &traces_path,
                    &[
                        op.scenario.clone(),
                        b.building.to_string(),
                        t.to_string(),
                        b.t_i[t].to_string(),
                        b.q_sp[t].to_string(),
                        b.e_in[t].to_string(),
                        b.e_out[t].to_string(),
                        b.gas[t].to_string(),
                    ],
                )?;
            }
        }
    }
    finish(w, &traces_path)?;
    Ok(vec![plan_path, breakdown_path, designs_path, traces_path])
}

pub fn read_plan(path: &Path) -> Result<PlanResult, Error> {
    read_json(path)
}

pub fn emit_sensitivity(report: &SensitivityReport, out: &Path) -> Result<Vec<PathBuf>, Error> {
    create_dir(out)?;
    let json = out.join(SENSITIVITY_FILE);
    write_json(&json, report)?;
    let csv_path = out.join(SPREAD_FILE);
    let mut w = csv_writer(&csv_path)?;
    write_row(
        &mut w,
        &csv_path,
        &["factor", "entity", "device", "n", "min", "max", "mean", "std", "reference"].map(String::from),
    )?;
    for r in &report.spread {
        write_row(
            &mut w,
            &csv_path,
            &[
                r.factor.name().to_string(),
                r.entity.clone(),
                r.device.to_string(),
                r.n.to_string(),
                r.min.to_string(),
                r.max.to_string(),
                r.mean.to_string(),
                r.std.to_string(),
                r.reference.to_string(),
            ],
        )?;
    }
    finish(w, &csv_path)?;
    Ok(vec![json, csv_path])
}

pub fn write_run_manifest(out: &Path, manifest: &RunManifest) -> Result<PathBuf, Error> {
    create_dir(out)?;
    let p = out.join(RUN_MANIFEST_FILE);
    write_json(&p, manifest)?;
    Ok(p)
}

pub fn read_run_manifest(path: &Path) -> Result<RunManifest, Error> {
    read_json(path)
}
