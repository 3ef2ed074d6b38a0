//! Hand-written RC networks: forward-Euler simulation and dense solves.

use std::collections::BTreeMap;

use ecplan_core::thermal::{emit_thermal, KELVIN};
use ecplan_core::types::{BuildingConfig, RcParameters};
use ecplan_core::Tag;
use ecplan_milp::{solve, LinExpr, Model, SolveStatus};

use super::{highs, opts};

/// Node names, capacities and the edge list of a network of `order` nodes.
pub fn network(order: usize) -> RcParameters {
    let mut r = BTreeMap::from([("R_ia".to_string(), 0.0067)]);
    let mut c = BTreeMap::from([("C_i".to_string(), 2.0e7)]);
    let extra = [
        ("C_e", 3.0e7, "R_ie", 0.004),
        ("C_h", 2.0e6, "R_ih", 0.003),
        ("C_s", 1.0e6, "R_is", 0.01),
        ("C_m", 1.0e7, "R_im", 0.002),
    ];
    for &(ck, cv, rk, rv) in extra.iter().take(order - 1) {
        c.insert(ck.into(), cv);
        r.insert(rk.into(), rv);
    }
    if order >= 2 {
        r.insert("R_ea".into(), 0.01);
    }
    RcParameters {
        order: order as u8,
        resistances: r,
        capacities: c,
        a_w: 4.0,
        a_e: if order >= 2 { 10.0 } else { 0.0 },
    }
}

/// Explicit Euler on the physical network, written out node by node.
/// Index 0 is the interior; the rest follow `C_e, C_h, C_s, C_m`.
pub struct Sim {
    pub caps: Vec<f64>,
    /// (node a, node b or None for ambient, resistance)
    pub edges: Vec<(usize, Option<usize>, f64)>,
    pub solar: Vec<f64>,
    pub heated: usize,
}

impl Sim {
    pub fn new(rc: &RcParameters) -> Self {
        let keys = ["C_i", "C_e", "C_h", "C_s", "C_m"];
        let present: Vec<&str> = keys.iter().copied().filter(|k| rc.capacities.contains_key(*k)).collect();
        let idx = |k: &str| present.iter().position(|p| *p == k);
        let mut edges = vec![(0, None, rc.resistances["R_ia"])];
        for (ck, rk) in [("C_e", "R_ie"), ("C_h", "R_ih"), ("C_s", "R_is"), ("C_m", "R_im")] {
            if let Some(j) = idx(ck) {
                edges.push((0, Some(j), rc.resistances[rk]));
            }
        }
        if let Some(e) = idx("C_e") {
            edges.push((e, None, rc.resistances["R_ea"]));
        }
        let mut solar = vec![0.0; present.len()];
        solar[0] = rc.a_w;
        if let Some(e) = idx("C_e") {
            solar[e] = rc.a_e;
        }
        Sim {
            caps: present.iter().map(|k| rc.capacities[*k]).collect(),
            edges,
            solar,
            heated: idx("C_h").unwrap_or(0),
        }
    }

    /// Heat flow into every node (W).
    pub fn flows(&self, x: &[f64], t_amb: f64, i_sol: f64, q_kw: f64) -> Vec<f64> {
        let mut f: Vec<f64> = self.solar.iter().map(|a| a * i_sol).collect();
        f[self.heated] += 1000.0 * q_kw;
        for &(a, b, r) in &self.edges {
            let other = b.map_or(t_amb, |b| x[b]);
            let q = (other - x[a]) / r;
            f[a] += q;
            if let Some(b) = b {
                f[b] -= q;
            }
        }
        f
    }

    /// States at rest with the interior held at `t_i0`: solves the node
    /// balances for the other temperatures and the heating input.
    pub fn held_start(&self, t_i0: f64, t_amb: f64, i_sol: f64) -> Vec<f64> {
        let n = self.caps.len();
        // unknowns: x[1..n] and the heating input; the balances are affine in them
        let eval = |y: &[f64]| {
            let mut x = vec![t_i0];
            x.extend_from_slice(&y[..n - 1]);
            self.flows(&x, t_amb, i_sol, y[n - 1])
        };
        let f0 = eval(&vec![0.0; n]);
        let mut a = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let fj = eval(&e);
            for k in 0..n {
                a[k][j] = fj[k] - f0[k];
            }
        }
        let y = solve_dense(a, f0.iter().map(|v| -v).collect());
        let mut x = vec![t_i0];
        x.extend_from_slice(&y[..n - 1]);
        x
    }

    /// Node temperatures at rest under constant inputs, from `G x = b`.
    pub fn steady(&self, t_amb: f64, i_sol: f64, q_kw: f64) -> Vec<f64> {
        let n = self.caps.len();
        let mut g = vec![vec![0.0; n]; n];
        let mut b: Vec<f64> = self.solar.iter().map(|a| a * i_sol).collect();
        b[self.heated] += 1000.0 * q_kw;
        for &(i, j, r) in &self.edges {
            g[i][i] += 1.0 / r;
            match j {
                Some(j) => {
                    g[j][j] += 1.0 / r;
                    g[i][j] -= 1.0 / r;
                    g[j][i] -= 1.0 / r;
                }
                None => b[i] += t_amb / r,
            }
        }
        solve_dense(g, b)
    }

    pub fn run(&self, x0: f64, t_amb: &[f64], i_sol: &[f64], q: &[f64], dt: f64) -> Vec<Vec<f64>> {
        let mut x = self.held_start(x0, t_amb[0], i_sol[0]);
        let mut out = vec![x.clone()];
        for t in 0..q.len() - 1 {
            let f = self.flows(&x, t_amb[t], i_sol[t], q[t]);
            for n in 0..x.len() {
                x[n] += dt * f[n] / self.caps[n];
            }
            out.push(x.clone());
        }
        out
    }
}

pub fn solve_states(rc: &RcParameters, t_amb: &[f64], i_sol: &[f64], q: &[f64], x0: f64) -> Vec<f64> {
    let b = BuildingConfig { id: 1, rc: rc.clone(), roof_area: 0.0, comfort_buffer: 0.5, devices: vec![] };
    let mut m = Model::new("rc");
    let tag = Tag::new("b1", Some("s0"));
    let refs = emit_thermal(&mut m, &b, t_amb, i_sol, x0, q.len(), 1.0, &tag).unwrap();
    for (t, &v) in refs.q_sp.iter().enumerate() {
        m.fix(v, q[t]).unwrap();
    }
    m.set_objective(LinExpr::new()).unwrap();
    let res = solve(&m, &highs(), &opts()).unwrap();
    assert_eq!(res.status, SolveStatus::Optimal);
    refs.t_i().iter().map(|v| res.values[v.index()] - KELVIN).collect()
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}
