//! Domain types shared by every stage of the pipeline.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::Error;

/// Physical unit carried by a [`TimeSeries`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Unit {
    #[serde(rename = "degC")]
    Celsius,
    #[serde(rename = "W")]
    Watt,
    #[serde(rename = "kW")]
    Kilowatt,
    #[serde(rename = "kWh")]
    KilowattHour,
    #[serde(rename = "EUR/kWh")]
    EurPerKwh,
    #[serde(rename = "W/m2")]
    WattPerSquareMetre,
    /// Price per kWh of gas (higher heating value).
    #[serde(rename = "EUR/kWh_gas")]
    EurPerGasKwh,
}

/// Uniformly sampled series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub start: NaiveDateTime,
    pub step_hours: f64,
    pub values: Vec<f64>,
    pub unit: Unit,
}

impl TimeSeries {
    pub fn new(
        start: NaiveDateTime,
        step_hours: f64,
        values: Vec<f64>,
        unit: Unit,
    ) -> Result<Self, Error> {
        let ts = Self {
            start,
            step_hours,
            values,
            unit,
        };
        ts.check()?;
        Ok(ts)
    }

    pub fn constant(start: NaiveDateTime, step_hours: f64, n: usize, value: f64, unit: Unit) -> Self {
        Self {
            start,
            step_hours,
            values: vec![value; n],
            unit,
        }
    }

    pub fn check(&self) -> Result<(), Error> {
        if self.values.is_empty() {
            return Err(Error::Invalid("time series has no values".into()));
        }
        if !(self.step_hours > 0.0 && self.step_hours.is_finite()) {
            return Err(Error::Invalid(format!(
                "time series step {} h is not positive",
                self.step_hours
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("time series value #{i} is not finite")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn truncate(&mut self, n: usize) {
        self.values.truncate(n);
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }
}

/// Parameters of a lumped RC network.
///
/// The states present follow from the capacities: `C_i` (interior) is
/// mandatory, `C_e` (envelope), `C_h` (heater), `C_s` (sensor) and `C_m`
/// (medium) each add a node with its coupling resistance to the interior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RcParameters {
    pub order: u8,
    pub resistances: BTreeMap<String, f64>,
    pub capacities: BTreeMap<String, f64>,
    #[serde(rename = "A_w")]
    pub a_w: f64,
    #[serde(rename = "A_e", default)]
    pub a_e: f64,
}

/// A thermal state node of the RC network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Interior,
    Sensor,
    Medium,
    Heater,
    Envelope,
}

impl Node {
    pub const ALL: [Node; 5] = [
        Node::Interior,
        Node::Sensor,
        Node::Medium,
        Node::Heater,
        Node::Envelope,
    ];

    pub fn capacity_key(self) -> &'static str {
        match self {
            Node::Interior => "C_i",
            Node::Sensor => "C_s",
            Node::Medium => "C_m",
            Node::Heater => "C_h",
            Node::Envelope => "C_e",
        }
    }

    /// Resistance linking this node to the interior.
    pub fn interior_key(self) -> Option<&'static str> {
        match self {
            Node::Interior => None,
            Node::Sensor => Some("R_is"),
            Node::Medium => Some("R_im"),
            Node::Heater => Some("R_ih"),
            Node::Envelope => Some("R_ie"),
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Node::Interior => "i",
            Node::Sensor => "s",
            Node::Medium => "m",
            Node::Heater => "h",
            Node::Envelope => "e",
        }
    }
}

pub const RESISTANCE_KEYS: [&str; 6] = ["R_is", "R_im", "R_ih", "R_ie", "R_ia", "R_ea"];

impl RcParameters {
    pub fn resistance(&self, key: &str) -> Option<f64> {
        self.resistances.get(key).copied()
    }

    pub fn capacity(&self, node: Node) -> Option<f64> {
        self.capacities.get(node.capacity_key()).copied()
    }

    pub fn has(&self, node: Node) -> bool {
        self.capacities.contains_key(node.capacity_key())
    }

    pub fn nodes(&self) -> Vec<Node> {
        Node::ALL.into_iter().filter(|&n| self.has(n)).collect()
    }

    /// Structural problems with the parameter set, as `(path, rule)` pairs.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if !(1..=5).contains(&self.order) {
            out.push(("order".into(), "order in 1..5".into()));
        }
        for (k, v) in &self.resistances {
            if !RESISTANCE_KEYS.contains(&k.as_str()) {
                out.push((format!("resistances.{k}"), "known resistance key".into()));
            } else if !(*v > 0.0 && v.is_finite()) {
                out.push((format!("resistances.{k}"), "R > 0".into()));
            }
        }
        for (k, v) in &self.capacities {
            if !Node::ALL.iter().any(|n| n.capacity_key() == k) {
                out.push((format!("capacities.{k}"), "known capacity key".into()));
            } else if !(*v > 0.0 && v.is_finite()) {
                out.push((format!("capacities.{k}"), "C > 0".into()));
            }
        }
        if !self.has(Node::Interior) {
            out.push(("capacities.C_i".into(), "C_i present".into()));
        }
        if self.capacities.len() != self.order as usize {
            out.push((
                "capacities".into(),
                "capacity count equals order".into(),
            ));
        }
        for n in Node::ALL {
            if let Some(rk) = n.interior_key() {
                let has_r = self.resistances.contains_key(rk);
                if self.has(n) != has_r {
                    out.push((
                        format!("resistances.{rk}"),
                        format!("{rk} present iff {} present", n.capacity_key()),
                    ));
                }
            }
        }
        let env = self.has(Node::Envelope);
        if env != self.resistances.contains_key("R_ea") {
            out.push(("resistances.R_ea".into(), "R_ea present iff C_e present".into()));
        }
        if !env && !self.resistances.contains_key("R_ia") {
            out.push(("resistances.R_ia".into(), "R_ia present without envelope".into()));
        }
        if self.a_w < 0.0 || self.a_e < 0.0 {
            out.push(("A_w".into(), "window and envelope areas >= 0".into()));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[allow(clippy::upper_case_acronyms, non_camel_case_types)]
pub enum DeviceKind {
    BAT,
    TES,
    BOL,
    HP,
    PV,
    STC,
    EL,
    HYD,
    FC,
    PV_COM,
    BAT_COM,
}

impl DeviceKind {
    pub fn name(self) -> &'static str {
        match self {
            DeviceKind::BAT => "BAT",
            DeviceKind::TES => "TES",
            DeviceKind::BOL => "BOL",
            DeviceKind::HP => "HP",
            DeviceKind::PV => "PV",
            DeviceKind::STC => "STC",
            DeviceKind::EL => "EL",
            DeviceKind::HYD => "HYD",
            DeviceKind::FC => "FC",
            DeviceKind::PV_COM => "PV_COM",
            DeviceKind::BAT_COM => "BAT_COM",
        }
    }

    pub fn is_building_level(self) -> bool {
        matches!(
            self,
            DeviceKind::BAT
                | DeviceKind::TES
                | DeviceKind::BOL
                | DeviceKind::HP
                | DeviceKind::PV
                | DeviceKind::STC
        )
    }

    /// Design variable is an area (m²) rather than a capacity.
    pub fn sized_by_area(self) -> bool {
        matches!(self, DeviceKind::PV | DeviceKind::STC | DeviceKind::PV_COM)
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn one() -> f64 {
    1.0
}

/// Techno-economic parameters of one unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub kind: DeviceKind,
    #[serde(default)]
    pub cap_min: f64,
    pub cap_max: f64,
    #[serde(default = "one")]
    pub eta_ch: f64,
    #[serde(default = "one")]
    pub eta_dch: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default = "one")]
    pub gamma_ch: f64,
    #[serde(default = "one")]
    pub gamma_dch: f64,
    #[serde(rename = "a_U")]
    pub a: f64,
    #[serde(rename = "b_U")]
    pub b: f64,
    #[serde(rename = "tau_U")]
    pub tau: f64,
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

impl DeviceSpec {
    /// A spec with neutral efficiencies and no cost; convenient in tests.
    pub fn new(kind: DeviceKind, cap_min: f64, cap_max: f64) -> Self {
        Self {
            kind,
            cap_min,
            cap_max,
            eta_ch: 1.0,
            eta_dch: 1.0,
            sigma: 1.0,
            gamma_ch: 1.0,
            gamma_dch: 1.0,
            a: 0.0,
            b: 0.0,
            tau: 20.0,
            extra: BTreeMap::new(),
        }
    }

    pub fn with_extra(mut self, key: &str, value: f64) -> Self {
        self.extra.insert(key.to_string(), value);
        self
    }

    pub fn extra(&self, key: &str) -> Option<f64> {
        self.extra.get(key).copied()
    }

    pub fn require(&self, key: &str) -> Result<f64, Error> {
        self.extra(key).ok_or_else(|| {
            Error::Invalid(format!("{} spec lacks parameter `{key}`", self.kind))
        })
    }

    pub fn violations(&self, path: &str) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |field: &str, rule: &str| out.push((format!("{path}.{field}"), rule.to_string()));
        if !(0.0..=1.0).contains(&self.sigma) {
            push("sigma", "0 <= sigma <= 1");
        }
        if !(self.eta_ch > 0.0 && self.eta_ch <= 1.0) {
            push("eta_ch", "0 < eta_* <= 1");
        }
        if !(self.eta_dch > 0.0 && self.eta_dch <= 1.0) {
            push("eta_dch", "0 < eta_* <= 1");
        }
        for (k, v) in &self.extra {
            if k.starts_with("eta") && !(*v > 0.0 && *v <= 1.0) {
                push(&format!("extra.{k}"), "0 < eta_* <= 1");
            }
        }
        if self.cap_min < 0.0 || !self.cap_max.is_finite() {
            push("cap_min", "0 <= cap_min and cap_max finite");
        }
        if self.cap_min > self.cap_max {
            push("cap_min", "cap_min <= cap_max");
        }
        if self.gamma_ch < 0.0 || self.gamma_dch < 0.0 {
            push("gamma_ch", "gamma >= 0");
        }
        if self.tau.is_nan() || self.tau < 1.0 {
            push("tau_U", "tau_U >= 1");
        }
        if self.a < 0.0 || self.b < 0.0 {
            push("a_U", "prices >= 0");
        }
        out
    }
}

fn default_buffer() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingConfig {
    pub id: usize,
    pub rc: RcParameters,
    pub roof_area: f64,
    #[serde(default = "default_buffer")]
    pub comfort_buffer: f64,
    #[serde(default)]
    pub devices: Vec<DeviceSpec>,
}

impl BuildingConfig {
    pub fn device(&self, kind: DeviceKind) -> Option<&DeviceSpec> {
        self.devices.iter().find(|d| d.kind == kind)
    }
}

fn default_slack_price() -> f64 {
    1e5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityConfig {
    pub buildings: Vec<BuildingConfig>,
    #[serde(default)]
    pub community_devices: Vec<DeviceSpec>,
    pub lv_limit: f64,
    pub mv_limit: f64,
    #[serde(default = "default_slack_price")]
    pub slack_price: f64,
    pub discount_rate: f64,
    pub horizon_steps: usize,
    pub step_hours: f64,
}

impl CommunityConfig {
    pub fn community_device(&self, kind: DeviceKind) -> Option<&DeviceSpec> {
        self.community_devices.iter().find(|d| d.kind == kind)
    }
}

/// One invariant violation found by [`validate_config`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.rule)
    }
}

/// Checks every declared invariant of the configuration; empty means valid.
pub fn validate_config(cfg: &CommunityConfig) -> Vec<Violation> {
    let mut raw: Vec<(String, String)> = Vec::new();
    if cfg.buildings.is_empty() {
        raw.push(("buildings".into(), "at least one building".into()));
    }
    if !(cfg.lv_limit > 0.0) {
        raw.push(("lv_limit".into(), "lv_limit > 0".into()));
    }
    if !(cfg.mv_limit > 0.0) {
        raw.push(("mv_limit".into(), "mv_limit > 0".into()));
    }
    if !(cfg.discount_rate > 0.0 && cfg.discount_rate < 1.0) {
        raw.push(("discount_rate".into(), "0 < discount_rate < 1".into()));
    }
    if !(cfg.step_hours > 0.0) {
        raw.push(("step_hours".into(), "step_hours > 0".into()));
    }
    if cfg.horizon_steps < 2 {
        raw.push(("horizon_steps".into(), "horizon_steps >= 2".into()));
    }
    if !(cfg.slack_price >= 0.0) {
        raw.push(("slack_price".into(), "slack_price >= 0".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (i, b) in cfg.buildings.iter().enumerate() {
        let p = format!("buildings[{i}]");
        if !seen.insert(b.id) {
            raw.push((format!("{p}.id"), "building ids unique".into()));
        }
        if !(b.roof_area >= 0.0) {
            raw.push((format!("{p}.roof_area"), "roof_area >= 0".into()));
        }
        if !(b.comfort_buffer >= 0.0) {
            raw.push((format!("{p}.comfort_buffer"), "comfort_buffer >= 0".into()));
        }
        for (path, rule) in b.rc.violations() {
            raw.push((format!("{p}.rc.{path}"), rule));
        }
        let mut kinds = std::collections::BTreeSet::new();
        for (j, d) in b.devices.iter().enumerate() {
            let dp = format!("{p}.devices[{j}]");
            if !d.kind.is_building_level() {
                raw.push((format!("{dp}.kind"), "building-level device kind".into()));
            }
            if !kinds.insert(d.kind) {
                raw.push((format!("{dp}.kind"), "one device per kind".into()));
            }
            raw.extend(d.violations(&dp));
        }
    }
    let mut kinds = std::collections::BTreeSet::new();
    for (j, d) in cfg.community_devices.iter().enumerate() {
        let dp = format!("community_devices[{j}]");
        if d.kind.is_building_level() {
            raw.push((format!("{dp}.kind"), "community-level device kind".into()));
        }
        if !kinds.insert(d.kind) {
            raw.push((format!("{dp}.kind"), "one device per kind".into()));
        }
        raw.extend(d.violations(&dp));
    }
    let h2 = [DeviceKind::EL, DeviceKind::HYD, DeviceKind::FC];
    let present = h2.iter().filter(|k| kinds.contains(*k)).count();
    if present != 0 && present != 3 {
        raw.push((
            "community_devices".into(),
            "EL, HYD and FC come together".into(),
        ));
    }
    raw.into_iter()
        .map(|(path, rule)| Violation { path, rule })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occupant {
    pub e_base: TimeSeries,
    pub t_set: TimeSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Economic {
    pub p_el: TimeSeries,
    pub p_gas: TimeSeries,
    pub p_co2: TimeSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Climate {
    pub t_amb: TimeSeries,
    pub i_sol: TimeSeries,
}

/// One realization of all uncertain profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub probability: f64,
    /// Keyed by building id.
    pub occupant: BTreeMap<usize, Occupant>,
    pub economic: Economic,
    pub climate: Climate,
}

impl Scenario {
    fn series(&self) -> Vec<&TimeSeries> {
        let mut v: Vec<&TimeSeries> = vec![
            &self.economic.p_el,
            &self.economic.p_gas,
            &self.economic.p_co2,
            &self.climate.t_amb,
            &self.climate.i_sol,
        ];
        for o in self.occupant.values() {
            v.push(&o.e_base);
            v.push(&o.t_set);
        }
        v
    }

    fn series_mut(&mut self) -> Vec<&mut TimeSeries> {
        let mut v: Vec<&mut TimeSeries> = vec![
            &mut self.economic.p_el,
            &mut self.economic.p_gas,
            &mut self.economic.p_co2,
            &mut self.climate.t_amb,
            &mut self.climate.i_sol,
        ];
        for o in self.occupant.values_mut() {
            v.push(&mut o.e_base);
            v.push(&mut o.t_set);
        }
        v
    }

    /// Common length of all member series.
    pub fn len(&self) -> usize {
        self.economic.p_el.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step_hours(&self) -> f64 {
        self.economic.p_el.step_hours
    }

    pub fn check(&self) -> Result<(), Error> {
        if !(self.probability >= 0.0 && self.probability.is_finite()) {
            return Err(Error::Invalid(format!(
                "scenario {} has probability {}",
                self.id, self.probability
            )));
        }
        let n = self.len();
        let step = self.step_hours();
        for s in self.series() {
            s.check()?;
            if s.len() != n || s.step_hours != step {
                return Err(Error::Invalid(format!(
                    "scenario {}: member series differ in length or step",
                    self.id
                )));
            }
        }
        Ok(())
    }

    pub fn truncate(&mut self, n: usize) {
        for s in self.series_mut() {
            s.truncate(n);
        }
    }

    pub fn occupant_of(&self, building: usize) -> Result<&Occupant, Error> {
        self.occupant.get(&building).ok_or_else(|| {
            Error::Invalid(format!(
                "scenario {} has no occupant profile for building {building}",
                self.id
            ))
        })
    }
}

/// Truncates all scenarios to their common length and renormalizes the
/// probabilities to sum to one.
pub fn align_scenarios(mut scenarios: Vec<Scenario>) -> Result<Vec<Scenario>, Error> {
    if scenarios.is_empty() {
        return Err(Error::Invalid("no scenarios to align".into()));
    }
    for s in &scenarios {
        s.check()?;
    }
    let step = scenarios[0].step_hours();
    if scenarios.iter().any(|s| s.step_hours() != step) {
        return Err(Error::Invalid("scenarios use different step sizes".into()));
    }
    let n = scenarios.iter().map(Scenario::len).min().unwrap_or(0);
    let total: f64 = scenarios.iter().map(|s| s.probability).sum();
    if !(total > 0.0) {
        return Err(Error::Invalid("scenario probabilities sum to zero".into()));
    }
    for s in &mut scenarios {
        s.truncate(n);
        s.probability /= total;
    }
    Ok(scenarios)
}
