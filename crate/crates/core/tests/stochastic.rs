//! Orderings of the stochastic solution against its benchmarks, and
//! invariances of the two-stage objective.

mod common;

use common::toys::{random_instance, tight};
use common::*;
use ecplan_core::orchestrator::{evaluate_designs, expected_value_scenario, plan_centralized, wait_and_see};
use ecplan_core::problem::{build_problem, BuildOptions};
use ecplan_core::Error;
use ecplan_core::types::Scenario;
use ecplan_milp::{solve, SolveStatus};

#[test]
fn perfect_information_and_expected_value_bracket_the_stochastic_optimum() {
    let mut finite = 0;
    for seed in 0..20 {
        let (cfg, sc) = random_instance(seed);
        let rp = plan_centralized(&cfg, &sc, &highs(), &tight()).unwrap();
        let ws = wait_and_see(&cfg, &sc, &highs(), &tight()).unwrap();
        let ev = expected_value_scenario(&sc).unwrap();
        let ev_plan = plan_centralized(&cfg, &[ev], &highs(), &tight()).unwrap();
        let slack = 1e-6 * rp.breakdown.tot.abs().max(1.0);
        assert!(ws <= rp.breakdown.tot + slack, "seed {seed}: EVPI < 0 ({ws} > {})", rp.breakdown.tot);
        // an expected-value design that cannot serve some scenario costs +inf
        match evaluate_designs(&cfg, &sc, &ev_plan.designs, &highs(), &tight()) {
            Ok(eev) => {
                finite += 1;
                assert!(
                    rp.breakdown.tot <= eev.breakdown.tot + slack,
                    "seed {seed}: VSS < 0 ({} > {})",
                    rp.breakdown.tot,
                    eev.breakdown.tot
                );
                assert!(eev.breakdown.identity_gap() <= 1e-6);
            }
            Err(Error::NoSolution(_)) => {}
            Err(e) => panic!("seed {seed}: {e}"),
        }
        for p in [&rp, &ev_plan] {
            assert!(p.breakdown.identity_gap() <= 1e-6);
        }
    }
    assert!(finite >= 15, "only {finite} expected-value designs were evaluable");
}

#[test]
fn duplicated_scenario_changes_nothing() {
    for seed in 0..5 {
        let (cfg, sc) = random_instance(100 + seed);
        let one = Scenario { probability: 1.0, ..sc[0].clone() };
        let twins = vec![
            Scenario { id: "a".into(), probability: 0.5, ..sc[0].clone() },
            Scenario { id: "b".into(), probability: 0.5, ..sc[0].clone() },
        ];
        let a = plan_centralized(&cfg, &[one], &highs(), &tight()).unwrap();
        let b = plan_centralized(&cfg, &twins, &highs(), &tight()).unwrap();
        assert!((a.breakdown.tot - b.breakdown.tot).abs() <= 1e-6 * a.breakdown.tot.abs().max(1.0));
        for (x, y) in a.designs.iter().zip(&b.designs) {
            assert_eq!((&x.entity, x.device, x.chi), (&y.entity, y.device, y.chi));
            assert!((x.value - y.value).abs() <= 1e-5 * x.value.abs().max(1.0), "{x:?} vs {y:?}");
        }
    }
}

/// With every slack fixed at zero the model stays feasible, so the plan
/// must not use any slack.
#[test]
fn slacks_stay_zero_when_limits_can_be_met() {
    for seed in 0..6 {
        let (cfg, sc) = random_instance(200 + seed);
        let mut p = build_problem(&cfg, &sc, &BuildOptions::default()).unwrap();
        let slacks: Vec<_> = p
            .model
            .var_ids()
            .filter(|&v| p.model.var(v).name.starts_with("s_"))
            .collect();
        assert!(!slacks.is_empty());
        for v in slacks {
            p.model.fix(v, 0.0).unwrap();
        }
        let res = solve(&p.model, &highs(), &tight()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal, "seed {seed} needs slack");

        let plan = plan_centralized(&cfg, &sc, &highs(), &tight()).unwrap();
        assert_eq!(plan.breakdown.slk, 0.0);
        for op in &plan.operations {
            assert!(op.s_mv.abs() <= 1e-9);
            assert!(op.buildings.iter().all(|b| b.s_lv.abs() <= 1e-9));
        }
    }
}

#[test]
fn undersized_connection_is_carried_by_the_slack() {
    let (mut cfg, sc) = random_instance(7);
    cfg.lv_limit = 0.01;
    let plan = plan_centralized(&cfg, &sc, &highs(), &tight()).unwrap();
    assert!(plan.breakdown.slk > 0.0);
    assert!(plan.breakdown.identity_gap() <= 1e-6);
}

#[test]
fn costlier_gas_never_lowers_the_optimum() {
    let (cfg, sc) = random_instance(31);
    let base = plan_centralized(&cfg, &sc, &highs(), &tight()).unwrap().breakdown.tot;
    let dear: Vec<Scenario> = sc
        .iter()
        .map(|s| {
            let mut s = s.clone();
            s.economic.p_gas = s.economic.p_gas.map(|v| v + 0.05);
            s
        })
        .collect();
    let higher = plan_centralized(&cfg, &dear, &highs(), &tight()).unwrap().breakdown.tot;
    assert!(higher >= base - 1e-6 * base.abs());
}
