#![allow(dead_code)]

pub mod rc;
pub mod scen;
pub mod storage;
pub mod toys;

use std::collections::BTreeMap;

use chrono::{NaiveDate, NaiveDateTime};
use ecplan_core::types::{
    BuildingConfig, Climate, CommunityConfig, DeviceKind, DeviceSpec, Economic, Occupant,
    RcParameters, Scenario, TimeSeries, Unit,
};
use ecplan_milp::{HighsBackend, SolveOptions};

pub fn t0() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2021, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

pub fn highs() -> HighsBackend {
    HighsBackend::default()
}

pub fn opts() -> SolveOptions {
    SolveOptions::default()
}

pub fn series(values: Vec<f64>, unit: Unit) -> TimeSeries {
    TimeSeries { start: t0(), step_hours: 1.0, values, unit }
}

pub fn rc_first_order() -> RcParameters {
    RcParameters {
        order: 1,
        resistances: [("R_ia".to_string(), 0.0067)].into(),
        capacities: [("C_i".to_string(), 2.0e7)].into(),
        a_w: 4.0,
        a_e: 0.0,
    }
}

pub fn boiler(max: f64) -> DeviceSpec {
    let mut d = DeviceSpec::new(DeviceKind::BOL, 2.0, max).with_extra("eta_BOL", 0.97);
    d.a = 100.0;
    d.b = 2000.0;
    d.tau = 20.0;
    d
}

pub fn battery(max: f64) -> DeviceSpec {
    let mut d = DeviceSpec::new(DeviceKind::BAT, 0.0, max);
    d.eta_ch = 0.95;
    d.eta_dch = 0.95;
    d.sigma = 0.999;
    d.gamma_ch = 0.5;
    d.gamma_dch = 0.5;
    d.a = 500.0;
    d.b = 1000.0;
    d.tau = 15.0;
    d
}

pub fn pv(max: f64) -> DeviceSpec {
    let mut d = DeviceSpec::new(DeviceKind::PV, 0.0, max).with_extra("eta_PV", 0.2);
    d.a = 200.0;
    d.b = 1000.0;
    d.tau = 25.0;
    d
}

pub fn building(id: usize, devices: Vec<DeviceSpec>) -> BuildingConfig {
    BuildingConfig { id, rc: rc_first_order(), roof_area: 40.0, comfort_buffer: 0.5, devices }
}

pub fn community(buildings: Vec<BuildingConfig>, horizon: usize) -> CommunityConfig {
    CommunityConfig {
        buildings,
        community_devices: vec![],
        lv_limit: 17.0,
        mv_limit: 50.0,
        slack_price: 1e5,
        discount_rate: 0.05,
        horizon_steps: horizon,
        step_hours: 1.0,
    }
}

/// Constant-profile scenario.
pub struct Flat {
    pub e_base: f64,
    pub t_set: f64,
    pub p_el: f64,
    pub p_gas: f64,
    pub p_co2: f64,
    pub t_amb: f64,
    pub i_sol: f64,
}

impl Default for Flat {
    fn default() -> Self {
        Self { e_base: 0.3, t_set: 19.0, p_el: 0.3, p_gas: 0.1, p_co2: 0.02, t_amb: 5.0, i_sol: 0.0 }
    }
}

impl Flat {
    pub fn scenario(&self, id: &str, p: f64, n: usize, buildings: &[usize]) -> Scenario {
        let c = |v, u| series(vec![v; n], u);
        Scenario {
            id: id.into(),
            probability: p,
            occupant: buildings
                .iter()
                .map(|&b| {
                    (b, Occupant { e_base: c(self.e_base, Unit::Kilowatt), t_set: c(self.t_set, Unit::Celsius) })
                })
                .collect::<BTreeMap<_, _>>(),
            economic: Economic {
                p_el: c(self.p_el, Unit::EurPerKwh),
                p_gas: c(self.p_gas, Unit::EurPerGasKwh),
                p_co2: c(self.p_co2, Unit::EurPerGasKwh),
            },
            climate: Climate {
                t_amb: c(self.t_amb, Unit::Celsius),
                i_sol: c(self.i_sol, Unit::WattPerSquareMetre),
            },
        }
    }
}

/// One over the present value of a unit payment at the end of each year.
pub fn annuity_by_summation(r: f64, years: u32) -> f64 {
    1.0 / (1..=years).map(|k| (1.0 + r).powi(-(k as i32))).sum::<f64>()
}
