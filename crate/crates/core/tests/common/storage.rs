//! Storage models solved in isolation and replayed through a scalar
//! recursion written here.

use ecplan_core::devices::{emit_design, emit_hydrogen_design, emit_storage, StorageCaps, StorageOps, StorageParams};
use ecplan_core::types::{DeviceKind, DeviceSpec};
use ecplan_core::Tag;
use ecplan_milp::{solve, LinExpr, Model, SolveStatus, VarId};

use super::{highs, opts};

pub struct Solved {
    pub ch: Vec<f64>,
    pub dch: Vec<f64>,
    pub state: Vec<f64>,
}

pub fn read(ops: &StorageOps, values: &[f64]) -> Solved {
    let pick = |v: &[VarId]| v.iter().map(|v| values[v.index()]).collect::<Vec<f64>>();
    Solved { ch: pick(&ops.ch), dch: pick(&ops.dch), state: pick(&ops.state) }
}

/// `E(t+1) = sigma E(t) + dt (eta_ch ch - dch / eta_dch)` from the solved
/// initial level; returns the largest deviation from the solved states.
pub fn replay_error(s: &Solved, eta_ch: f64, eta_dch: f64, sigma: f64, dt: f64) -> f64 {
    let mut e = s.state[0];
    let mut worst: f64 = 0.0;
    for t in 0..s.ch.len() {
        e = sigma * e + dt * (eta_ch * s.ch[t] - s.dch[t] / eta_dch);
        worst = worst.max((e - s.state[t + 1]).abs());
    }
    worst
}

/// Arbitrage against an alternating price with a sizing cost, so the
/// solver picks a non-trivial size and schedule.
pub fn arbitrage(model: &mut Model, ops: &StorageOps, size: VarId, prices: &[f64], dt: f64, sizing: f64) {
    let mut obj = LinExpr::term(size, sizing);
    for (t, p) in prices.iter().enumerate() {
        obj.add_term(ops.ch[t], p * dt);
        obj.add_term(ops.dch[t], -p * dt);
    }
    model.set_objective(obj).unwrap();
}

pub fn prices(h: usize, seed: u64) -> Vec<f64> {
    (0..h)
        .map(|t| {
            let x = ((t as u64 + 1) * 2654435761 + seed * 97) % 1000;
            0.05 + 0.4 * x as f64 / 1000.0
        })
        .collect()
}

pub fn single(kind: DeviceKind, eta_ch: f64, eta_dch: f64, sigma: f64, gamma: f64) -> DeviceSpec {
    let mut d = DeviceSpec::new(kind, 0.0, 20.0);
    d.eta_ch = eta_ch;
    d.eta_dch = eta_dch;
    d.sigma = sigma;
    d.gamma_ch = gamma;
    d.gamma_dch = gamma;
    d
}

pub fn solve_single(spec: &DeviceSpec, h: usize, dt: f64, seed: u64) -> (Solved, f64) {
    let mut m = Model::new("storage");
    let tag = Tag::new("b1", Some("s0"));
    let d = emit_design(&mut m, spec, &tag).unwrap();
    let ops = emit_storage(&mut m, spec.kind, &StorageParams::from_spec(spec), StorageCaps::single(&d), h, dt, &tag)
        .unwrap();
    arbitrage(&mut m, &ops, d.size, &prices(h, seed), dt, 0.01);
    let res = solve(&m, &highs(), &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    (read(&ops, &res.values), res.values[d.size.index()])
}

pub fn hydrogen_specs(eta_el: f64, eta_fc: f64, sigma: f64) -> [DeviceSpec; 3] {
    let mut el = DeviceSpec::new(DeviceKind::EL, 0.0, 10.0);
    el.eta_ch = eta_el;
    let mut hyd = DeviceSpec::new(DeviceKind::HYD, 0.0, 100.0);
    hyd.sigma = sigma;
    let mut fc = DeviceSpec::new(DeviceKind::FC, 0.0, 10.0);
    fc.eta_dch = eta_fc;
    [el, hyd, fc]
}

pub fn emit_trio(m: &mut Model, specs: &[DeviceSpec; 3], h: usize, dt: f64) -> (StorageOps, [VarId; 3]) {
    let tag = Tag::new("COM", Some("s0"));
    let d = emit_hydrogen_design(m, &specs[0], &specs[1], &specs[2], &tag).unwrap();
    let p = StorageParams::hydrogen(&specs[0], &specs[1], &specs[2]);
    let ops = emit_storage(m, DeviceKind::HYD, &p, StorageCaps::hydrogen(&d), h, dt, &tag).unwrap();
    (ops, [d[0].size, d[1].size, d[2].size])
}

/// Electricity in at hour 0, as much as possible out afterwards.
pub fn round_trip(eta_el: f64, eta_fc: f64) -> f64 {
    let specs = hydrogen_specs(eta_el, eta_fc, 1.0);
    let mut m = Model::new("rt");
    let (ops, _) = emit_trio(&mut m, &specs, 4, 1.0);
    m.fix(ops.ch[0], 1.0).unwrap();
    for t in 1..4 {
        m.fix(ops.ch[t], 0.0).unwrap();
    }
    let mut obj = LinExpr::new();
    for &v in &ops.dch {
        obj.add_term(v, -1.0);
    }
    m.set_objective(obj).unwrap();
    let res = solve(&m, &highs(), &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    ops.dch.iter().map(|v| res.values[v.index()]).sum()
}
