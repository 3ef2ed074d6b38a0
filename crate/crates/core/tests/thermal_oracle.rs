//! RC dynamics against a hand-written forward-Euler simulator and a direct
//! steady-state solve.

mod common;

use common::rc::{network, solve_states, Sim};

#[test]
fn fixed_heating_matches_forward_euler_for_every_order() {
    let h = 72;
    let t_amb: Vec<f64> = (0..h).map(|t| 5.0 + 4.0 * (t as f64 * 0.26).sin()).collect();
    let i_sol: Vec<f64> = (0..h).map(|t| (300.0 * ((t % 24) as f64 * 0.26 - 1.5).sin()).max(0.0)).collect();
    let q: Vec<f64> = (0..h).map(|t| 2.0 + 1.5 * ((t * 7 % 11) as f64 / 11.0)).collect();
    for order in 1..=5 {
        let rc = network(order);
        let got = solve_states(&rc, &t_amb, &i_sol, &q, 19.0);
        let want = Sim::new(&rc).run(19.0, &t_amb, &i_sol, &q, 3600.0);
        let err = got
            .iter()
            .zip(&want)
            .map(|(g, w)| (g - w[0]).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-8, "order {order}: max |T_i - sim| = {err:e}");
    }
}

#[test]
fn fifth_order_settles_to_linear_steady_state() {
    let rc = network(5);
    let sim = Sim::new(&rc);
    let (t_amb, i_sol, q) = (2.0, 150.0, 3.0);
    let steady = sim.steady(t_amb, i_sol, q);

    let h = 4000;
    let got = solve_states(&rc, &vec![t_amb; h], &vec![i_sol; h], &vec![q; h], 19.0);
    let err = (got[h - 1] - steady[0]).abs();
    assert!(err <= 1e-6, "T_i(H) = {}, steady = {}, err {err:e}", got[h - 1], steady[0]);
}
