//! Distributed scheme against the centralized optimum.

mod common;

use common::*;
use ecplan_core::orchestrator::{initialize_coordination, plan_centralized, plan_distributed, CoordinationState};
use ecplan_core::types::{DeviceKind, DeviceSpec};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

#[test]
fn independent_buildings_converge_on_the_centralized_optimum() {
    let buildings = (1..=3).map(|b| building(b, vec![boiler(30.0)])).collect();
    let cfg = community(buildings, 24);
    let sc = vec![
        Flat::default().scenario("a", 0.5, 24, &[1, 2, 3]),
        Flat { t_amb: -2.0, ..Flat::default() }.scenario("b", 0.5, 24, &[1, 2, 3]),
    ];
    let c = plan_centralized(&cfg, &sc, &highs(), &opts()).unwrap();
    let d = plan_distributed(&cfg, &sc, 1.0, 50, &highs(), &opts()).unwrap();
    assert!(d.meta.converged);
    assert!(rel(d.breakdown.tot, c.breakdown.tot) <= 1e-6);
    // nothing to coordinate: the second sweep only confirms the first
    assert_eq!(d.meta.o_tot_history.len(), 2);
    assert!((d.meta.o_tot_history[0] - d.meta.o_tot_history[1]).abs() <= 1.0);
}

fn shared_pv() -> DeviceSpec {
    let mut d = DeviceSpec::new(DeviceKind::PV_COM, 0.0, 200.0).with_extra("eta_PV", 0.2);
    d.a = 150.0;
    d.b = 500.0;
    d.tau = 25.0;
    d
}

fn shared_battery() -> DeviceSpec {
    let mut d = battery(100.0);
    d.kind = DeviceKind::BAT_COM;
    d
}

#[test]
fn shared_devices_stay_within_one_percent_and_never_worsen() {
    let buildings = (1..=3)
        .map(|b| building(b, if b == 2 { vec![boiler(30.0), pv(40.0)] } else { vec![boiler(30.0)] }))
        .collect();
    let mut cfg = community(buildings, 24);
    cfg.community_devices = vec![shared_pv(), shared_battery()];
    let sc = vec![
        Flat { i_sol: 400.0, p_el: 0.4, ..Flat::default() }.scenario("sun", 0.6, 24, &[1, 2, 3]),
        Flat { i_sol: 50.0, t_amb: 0.0, ..Flat::default() }.scenario("dull", 0.4, 24, &[1, 2, 3]),
    ];
    let c = plan_centralized(&cfg, &sc, &highs(), &opts()).unwrap();
    let d = plan_distributed(&cfg, &sc, 1.0, 50, &highs(), &opts()).unwrap();
    assert!(d.meta.converged);
    assert!(rel(d.breakdown.tot, c.breakdown.tot) <= 0.01, "{} vs {}", d.breakdown.tot, c.breakdown.tot);
    // a decomposition cannot beat the joint optimum
    assert!(d.breakdown.tot >= c.breakdown.tot - 1e-6 * c.breakdown.tot.abs());
    let h = &d.meta.o_tot_history;
    assert!(h.windows(2).all(|w| w[1] <= w[0] + 1e-6 * w[0].abs()), "{h:?}");
    assert!(d.breakdown.identity_gap() <= 1e-9);
    let last = h.len() - 1;
    assert!((h[last] - h[last - 1]).abs() <= 1.0);
}

#[test]
fn exhausted_sweeps_are_flagged() {
    let buildings = (1..=2).map(|b| building(b, vec![boiler(30.0)])).collect();
    let cfg = community(buildings, 24);
    let sc = vec![Flat::default().scenario("a", 1.0, 24, &[1, 2])];
    let d = plan_distributed(&cfg, &sc, 1.0, 1, &highs(), &opts()).unwrap();
    assert!(!d.meta.converged);
    assert_eq!(d.meta.iterations, 1);
}

#[test]
fn coordination_starts_from_zero_flows_and_round_trips() {
    let buildings = (1..=2).map(|b| building(b, vec![boiler(30.0)])).collect();
    let cfg = community(buildings, 24);
    let sc = vec![
        Flat::default().scenario("a", 0.5, 48, &[1, 2]),
        Flat::default().scenario("b", 0.5, 48, &[1, 2]),
    ];
    let st = initialize_coordination(&cfg, &sc, 1.0, 50).unwrap();
    assert_eq!(st.epsilon, 1.0);
    assert!(st.o_tot_history.is_empty());
    for flows in st.others_net.values() {
        assert_eq!(flows.len(), 2);
        assert!(flows.iter().all(|f| f.len() == 24 && f.iter().all(|&v| v == 0.0)));
    }
    let back: CoordinationState = serde_json::from_str(&serde_json::to_string(&st).unwrap()).unwrap();
    assert_eq!(back, st);
    assert!(initialize_coordination(&cfg, &sc, 0.0, 50).is_err());
}
