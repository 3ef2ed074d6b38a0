//! Small random communities with diurnal scenarios.

use std::collections::BTreeMap;

use ecplan_core::types::{Climate, CommunityConfig, DeviceKind, DeviceSpec, Economic, Occupant, Scenario, Unit};
use ecplan_milp::SolveOptions;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{battery, boiler, building, community, pv, series, Flat};

pub const H: usize = 24;

pub fn tight() -> SolveOptions {
    SolveOptions { mip_gap: 1e-9, ..SolveOptions::default() }
}

/// Diurnal profiles with random levels and amplitudes.
pub fn random_scenario(rng: &mut ChaCha8Rng, id: &str, p: f64, buildings: &[usize]) -> Scenario {
    let wave = |t: usize| ((t as f64 - 6.0) * std::f64::consts::PI / 12.0).sin();
    let t_mean = rng.random_range(-5.0..10.0);
    let t_amp = rng.random_range(0.0..6.0);
    let sun = rng.random_range(0.0..500.0);
    let el = rng.random_range(0.1..0.4);
    let el_amp = rng.random_range(0.0..0.15);
    let gas = rng.random_range(0.05..0.15);
    let co2 = rng.random_range(0.0..0.05);
    let occupant = buildings
        .iter()
        .map(|&b| {
            let base = rng.random_range(0.1..1.0);
            let t_set = rng.random_range(17.0..21.0);
            (
                b,
                Occupant {
                    e_base: series((0..H).map(|t| base * (1.0 + 0.5 * wave(t).max(0.0))).collect(), Unit::Kilowatt),
                    t_set: series(vec![t_set; H], Unit::Celsius),
                },
            )
        })
        .collect::<BTreeMap<_, _>>();
    Scenario {
        id: id.into(),
        probability: p,
        occupant,
        economic: Economic {
            p_el: series((0..H).map(|t| el + el_amp * wave(t)).collect(), Unit::EurPerKwh),
            p_gas: series(vec![gas; H], Unit::EurPerGasKwh),
            p_co2: series(vec![co2; H], Unit::EurPerGasKwh),
        },
        climate: Climate {
            t_amb: series((0..H).map(|t| t_mean + t_amp * wave(t)).collect(), Unit::Celsius),
            i_sol: series((0..H).map(|t| sun * wave(t).max(0.0)).collect(), Unit::WattPerSquareMetre),
        },
    }
}

pub fn random_instance(seed: u64) -> (CommunityConfig, Vec<Scenario>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.random_range(1..=2usize);
    let ids: Vec<usize> = (1..=nb).collect();
    let buildings = ids
        .iter()
        .map(|&b| {
            // a minimum boiler size that covers any drawn climate keeps
            // fixed-design evaluations feasible
            let mut bol = boiler(30.0);
            bol.cap_min = 12.0;
            let mut devices = vec![bol];
            if rng.random_bool(0.6) {
                devices.push(pv(40.0));
            }
            if rng.random_bool(0.5) {
                devices.push(battery(20.0));
            }
            building(b, devices)
        })
        .collect();
    let ns = rng.random_range(2..=3usize);
    let mut w: Vec<f64> = (0..ns).map(|_| rng.random_range(0.2..1.0)).collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= sum);
    let scenarios = (0..ns).map(|i| random_scenario(&mut rng, &format!("s{i}"), w[i], &ids)).collect();
    (community(buildings, H), scenarios)
}

pub fn heat_pump() -> DeviceSpec {
    let mut d = DeviceSpec::new(DeviceKind::HP, 0.0, 15.0)
        .with_extra("alpha_HP_1", 5.8)
        .with_extra("alpha_HP_2", -0.024)
        .with_extra("alpha_HP_3", 0.8)
        .with_extra("alpha_HP_4", -0.01)
        .with_extra("T_dist", 45.0);
    d.a = 100.0;
    d.tau = 20.0;
    d
}

/// Boiler plus heat pump behind a connection too small for the heat pump
/// to cover a large base load.
pub fn tight_hybrid() -> CommunityConfig {
    let mut cfg = community(vec![building(1, vec![boiler(30.0), heat_pump()])], 24);
    cfg.lv_limit = 2.2;
    cfg
}

/// Three members that differ in every factor; occupant `i` scales the
/// base load by `scales[i]`.
pub fn members(scales: [f64; 3]) -> Vec<Scenario> {
    (0..3)
        .map(|i| {
            Flat {
                e_base: scales[i],
                t_amb: -6.0 + i as f64,
                p_el: 0.10 + 0.01 * i as f64,
                p_gas: 0.15,
                ..Flat::default()
            }
            .scenario(&format!("m{i}"), 1.0 / 3.0, 24, &[1])
        })
        .collect()
}
