//! One-at-a-time sensitivity study.

mod common;

use common::toys::{members, tight_hybrid};
use common::*;
use ecplan_core::orchestrator::{plan_centralized, run_sensitivity};
use ecplan_core::scenario::{
    compose_factor_scenarios, nominal_scenario, scenario_channel, scenario_distances, ComposeMode, Factor,
};
use ecplan_core::types::{DeviceKind, Scenario};

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

#[test]
fn nine_cases_with_pinned_channels_matching_their_nominal() {
    let joint = members([0.5, 1.0, 2.0]);
    let cases = compose_factor_scenarios(&joint, ComposeMode::OneAtATime).unwrap();
    assert_eq!(cases.len(), 9);
    for case in &cases {
        let f = case.factor.unwrap();
        let nominal = &joint[nominal_scenario(&joint, f).unwrap()];
        let member = joint.iter().find(|m| Some(&m.id) == case.member.as_ref()).unwrap();
        let s = &case.scenarios[0];
        assert_eq!(s.probability, 1.0);
        for g in Factor::ALL {
            let source = if g == f { member } else { nominal };
            for c in g.channels(&[1]) {
                assert_eq!(
                    bits(scenario_channel(s, &c).unwrap()),
                    bits(scenario_channel(source, &c).unwrap()),
                    "{} channel {c}",
                    s.id
                );
            }
        }
    }
}

#[test]
fn nominal_is_the_single_medoid_of_the_complement() {
    let joint = members([0.5, 1.0, 2.0]);
    for f in Factor::ALL {
        let d = scenario_distances(&joint, &f.complement_channels(&[1])).unwrap();
        let cost = |i: usize| (0..joint.len()).map(|j| d.get(i, j)).sum::<f64>();
        let best = (0..joint.len()).min_by(|&a, &b| cost(a).total_cmp(&cost(b))).unwrap();
        assert_eq!(nominal_scenario(&joint, f).unwrap(), best);
    }
}

#[test]
fn larger_base_load_never_shrinks_the_boiler() {
    let cfg = tight_hybrid();
    let joint = members([0.5, 1.0, 2.0]);
    let report = run_sensitivity(&cfg, &joint, &Factor::ALL, None, &highs(), &opts()).unwrap();
    assert_eq!(report.cases.len(), 9);
    assert!(report.cases.iter().all(|c| c.objective.is_some()));
    let boiler: Vec<f64> = ["m0", "m1", "m2"]
        .iter()
        .map(|m| {
            let c = report.cases.iter().find(|c| c.factor == Factor::Occ && c.member == *m).unwrap();
            c.designs.iter().find(|d| d.device == DeviceKind::BOL).unwrap().value
        })
        .collect();
    assert!(boiler.windows(2).all(|w| w[0] <= w[1] + 1e-6), "{boiler:?}");
    assert!(boiler[2] > boiler[0], "scaling should matter here: {boiler:?}");
}

#[test]
fn identical_members_have_no_spread() {
    let cfg = tight_hybrid();
    let joint: Vec<Scenario> =
        (0..3).map(|i| Flat::default().scenario(&format!("m{i}"), 1.0 / 3.0, 24, &[1])).collect();
    let report = run_sensitivity(&cfg, &joint, &[Factor::Occ, Factor::Clim], None, &highs(), &opts()).unwrap();
    assert_eq!(report.cases.len(), 6);
    for row in &report.spread {
        assert_eq!(row.n, 3);
        assert!(row.std <= 1e-9 && row.max - row.min <= 1e-9, "{row:?}");
    }
}

#[test]
fn single_member_spread_is_its_design() {
    let cfg = tight_hybrid();
    let joint = vec![Flat::default().scenario("only", 1.0, 24, &[1])];
    let report = run_sensitivity(&cfg, &joint, &[Factor::Eco], None, &highs(), &opts()).unwrap();
    assert_eq!(report.cases.len(), 1);
    for row in &report.spread {
        let d = report.cases[0].designs.iter().find(|d| d.device == row.device).unwrap();
        assert_eq!((row.n, row.std), (1, 0.0));
        assert_eq!(row.mean, d.value);
    }
}

#[test]
fn reference_designs_equal_the_centralized_plan() {
    let cfg = tight_hybrid();
    let joint = members([0.5, 1.0, 2.0]);
    let plan = plan_centralized(&cfg, &joint, &highs(), &opts()).unwrap();
    let report = run_sensitivity(&cfg, &joint, &[Factor::Occ], None, &highs(), &opts()).unwrap();
    assert_eq!(report.reference, plan.designs);
    assert_eq!(report.reference_objective.to_bits(), plan.breakdown.tot.to_bits());
}

#[test]
fn infeasible_case_is_reported_and_left_out() {
    // comfort cannot be met in the coldest member without enough heating
    let mut cfg = community(vec![building(1, vec![boiler(4.0)])], 24);
    cfg.lv_limit = 17.0;
    let joint: Vec<Scenario> = [5.0, 0.0, -30.0]
        .iter()
        .enumerate()
        .map(|(i, &t)| Flat { t_amb: t, ..Flat::default() }.scenario(&format!("m{i}"), 1.0 / 3.0, 24, &[1]))
        .collect();
    let reference = plan_centralized(&cfg, &joint[..1], &highs(), &opts()).unwrap();
    let report = run_sensitivity(&cfg, &joint, &[Factor::Clim], Some(&reference), &highs(), &opts()).unwrap();
    assert_eq!(report.cases.len(), 3);
    let failed: Vec<_> = report.cases.iter().filter(|c| c.objective.is_none()).collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].member, "m2");
    assert!(report.spread.iter().all(|r| r.n == 2));
}
