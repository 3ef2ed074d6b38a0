//! RC heat dynamics and comfort bounds for one building.
//!
//! Temperatures enter the model in kelvin so that every state variable is
//! non-negative; all RC terms are differences, so the offset is harmless.
//! Inputs at step `t` drive the state at `t + 1` (explicit Euler).

use ecplan_milp::{ConstraintId, ConstraintSense, Domain, LinExpr, Model, VarId};

use crate::types::{BuildingConfig, Node, RcParameters};
use crate::{Error, Tag};

pub const KELVIN: f64 = 273.15;
/// Largest admissible `t_s / (R·C)` for any coupling.
pub const MAX_EULER_RATIO: f64 = 2.0;

/// One conductive coupling; `to = None` means the ambient.
#[derive(Debug, Clone, Copy)]
pub struct Coupling {
    pub from: Node,
    pub to: Option<Node>,
    pub resistance: f64,
    pub key: &'static str,
}

/// The network implied by a parameter set.
pub fn couplings(rc: &RcParameters) -> Vec<Coupling> {
    let mut out = Vec::new();
    for n in [Node::Sensor, Node::Medium, Node::Heater, Node::Envelope] {
        if let (true, Some(key)) = (rc.has(n), n.interior_key()) {
            if let Some(r) = rc.resistance(key) {
                out.push(Coupling {
                    from: Node::Interior,
                    to: Some(n),
                    resistance: r,
                    key,
                });
            }
        }
    }
    if let Some(r) = rc.resistance("R_ia") {
        out.push(Coupling {
            from: Node::Interior,
            to: None,
            resistance: r,
            key: "R_ia",
        });
    }
    if rc.has(Node::Envelope) {
        if let Some(r) = rc.resistance("R_ea") {
            out.push(Coupling {
                from: Node::Envelope,
                to: None,
                resistance: r,
                key: "R_ea",
            });
        }
    }
    out
}

/// Node receiving the space-heating input.
pub fn heated_node(rc: &RcParameters) -> Node {
    if rc.has(Node::Heater) {
        Node::Heater
    } else {
        Node::Interior
    }
}

/// Rejects parameter sets whose explicit-Euler step would diverge.
pub fn check_stability(rc: &RcParameters, step_hours: f64) -> Result<(), Error> {
    let dt = step_hours * 3600.0;
    for c in couplings(rc) {
        for node in std::iter::once(c.from).chain(c.to) {
            let cap = rc.capacity(node).unwrap_or(f64::NAN);
            let ratio = dt / (c.resistance * cap);
            if !(ratio <= MAX_EULER_RATIO) {
                return Err(Error::Unstable {
                    pair: format!("{}*{}", c.key, node.capacity_key()),
                    ratio,
                });
            }
        }
    }
    Ok(())
}

/// Initial temperature (°C) of every node when the building has been held
/// at `t_i0` under the first-step ambient conditions: sensor and medium
/// sit at the interior temperature, the envelope at its steady state
/// between interior and ambient, and the heater above the interior by what
/// it must supply to balance the losses (never below it).
pub fn initial_states(rc: &RcParameters, t_i0: f64, t_amb0: f64, i_sol0: f64) -> Vec<(Node, f64)> {
    let mut x: Vec<(Node, f64)> = rc.nodes().into_iter().map(|n| (n, t_i0)).collect();
    let set = |x: &mut Vec<(Node, f64)>, node: Node, v: f64| {
        if let Some(e) = x.iter_mut().find(|(n, _)| *n == node) {
            e.1 = v;
        }
    };
    if rc.has(Node::Envelope) {
        if let (Some(r_ie), Some(r_ea)) = (rc.resistance("R_ie"), rc.resistance("R_ea")) {
            let g = 1.0 / r_ie + 1.0 / r_ea;
            set(&mut x, Node::Envelope, (t_i0 / r_ie + t_amb0 / r_ea + rc.a_e * i_sol0) / g);
        }
    }
    if heated_node(rc) == Node::Heater {
        let state = |x: &Vec<(Node, f64)>, n: Node| x.iter().find(|(m, _)| *m == n).map(|e| e.1);
        let mut inflow = rc.a_w * i_sol0;
        for c in couplings(rc).iter().filter(|c| c.from == Node::Interior) {
            let other = c.to.map_or(t_amb0, |n| state(&x, n).unwrap_or(t_i0));
            inflow += (other - t_i0) / c.resistance;
        }
        let r_ih = rc.resistance("R_ih").unwrap_or(0.0);
        set(&mut x, Node::Heater, t_i0 + (-inflow).max(0.0) * r_ih);
    }
    x
}

/// Handles to the thermal states and the space-heating decision.
#[derive(Debug, Clone)]
pub struct ThermalRefs {
    pub states: Vec<(Node, Vec<VarId>)>,
    /// Space heating delivered to the building (kW), one per step.
    pub q_sp: Vec<VarId>,
}

impl ThermalRefs {
    pub fn state(&self, node: Node) -> Option<&[VarId]> {
        self.states
            .iter()
            .find(|(n, _)| *n == node)
            .map(|(_, v)| v.as_slice())
    }

    pub fn t_i(&self) -> &[VarId] {
        self.state(Node::Interior).expect("interior node always exists")
    }
}

/// Emits the discretized RC dynamics over `horizon` steps.
///
/// The interior starts at `t_init` (°C), the other nodes as given by
/// [`initial_states`]. `t_amb` is in °C and `i_sol` in W/m².
#[allow(clippy::too_many_arguments)]
pub fn emit_thermal(
    model: &mut Model,
    building: &BuildingConfig,
    t_amb: &[f64],
    i_sol: &[f64],
    t_init: f64,
    horizon: usize,
    step_hours: f64,
    tag: &Tag,
) -> Result<ThermalRefs, Error> {
    let rc = &building.rc;
    let bad = rc.violations();
    if let Some((path, rule)) = bad.first() {
        return Err(Error::Invalid(format!(
            "building {} rc.{path}: {rule}",
            building.id
        )));
    }
    if t_amb.len() < horizon || i_sol.len() < horizon {
        return Err(Error::Invalid(format!(
            "climate series cover {} steps, horizon needs {horizon}",
            t_amb.len().min(i_sol.len())
        )));
    }
    if horizon == 0 {
        return Err(Error::Invalid("horizon must be positive".into()));
    }
    check_stability(rc, step_hours)?;

    let dt = step_hours * 3600.0;
    let nodes = rc.nodes();
    let init = initial_states(rc, t_init, t_amb[0], i_sol[0]);
    let mut states = Vec::with_capacity(nodes.len());
    for (&n, &(_, x0)) in nodes.iter().zip(&init) {
        let mut v = Vec::with_capacity(horizon);
        let var = format!("T_{}", n.tag());
        let t0 = x0 + KELVIN;
        v.push(model.add_var(tag.at(&var, 0), Domain::ContinuousNonneg, t0, t0)?);
        for t in 1..horizon {
            v.push(model.add_continuous(tag.at(&var, t), None)?);
        }
        states.push((n, v));
    }
    let q_sp: Vec<VarId> = (0..horizon)
        .map(|t| model.add_continuous(tag.at("Q_SP", t), None))
        .collect::<Result<_, _>>()?;
    let refs = ThermalRefs { states, q_sp };
    let links = couplings(rc);
    let heated = heated_node(rc);

    for &n in &nodes {
        let cap = rc.capacity(n).expect("node listed from capacities");
        let x = refs.state(n).unwrap();
        let solar_area = match n {
            Node::Interior => rc.a_w,
            Node::Envelope => rc.a_e,
            _ => 0.0,
        };
        for t in 0..horizon - 1 {
            // x[t+1] - x[t] - Σ a (y[t] - x[t]) - g q[t] = a_amb T_amb[t] + solar
            let mut e = LinExpr::with_capacity(8);
            e.add_term(x[t + 1], 1.0).add_term(x[t], -1.0);
            let mut rhs = dt * solar_area * i_sol[t] / cap;
            for c in links.iter().filter(|c| c.from == n || c.to == Some(n)) {
                let a = dt / (c.resistance * cap);
                let other = if c.from == n { c.to } else { Some(c.from) };
                e.add_term(x[t], a);
                match other {
                    Some(o) => {
                        e.add_term(refs.state(o).unwrap()[t], -a);
                    }
                    None => rhs += a * (t_amb[t] + KELVIN),
                }
            }
            if n == heated {
                e.add_term(refs.q_sp[t], -dt * 1000.0 / cap);
            }
            model.add_constraint(
                e,
                ConstraintSense::Eq,
                rhs,
                tag.at(&format!("rc_{}", n.tag()), t + 1),
            )?;
        }
    }
    Ok(refs)
}

/// Lower comfort bound `T_i(t) >= T_set(t) - buffer` for every step.
pub fn emit_comfort(
    model: &mut Model,
    refs: &ThermalRefs,
    t_set: &[f64],
    buffer: f64,
    tag: &Tag,
) -> Result<Vec<ConstraintId>, Error> {
    let ti = refs.t_i();
    if t_set.len() < ti.len() {
        return Err(Error::Invalid(format!(
            "set-point series has {} values, horizon needs {}",
            t_set.len(),
            ti.len()
        )));
    }
    ti.iter()
        .enumerate()
        .map(|(t, &v)| {
            model
                .add_constraint(
                    v,
                    ConstraintSense::Ge,
                    t_set[t] - buffer + KELVIN,
                    tag.at("comfort", t),
                )
                .map_err(Error::from)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::tests::rc1;

    fn building(rc: RcParameters) -> BuildingConfig {
        BuildingConfig {
            id: 1,
            rc,
            roof_area: 0.0,
            comfort_buffer: 0.5,
            devices: vec![],
        }
    }

    #[test]
    fn stiff_pair_is_rejected_with_its_name() {
        let mut rc = rc1();
        rc.capacities.insert("C_i".into(), 100.0);
        let err = check_stability(&rc, 1.0).unwrap_err();
        assert!(err.to_string().contains("R_ia*C_i"), "{err}");
    }

    #[test]
    fn comfort_bound_subtracts_buffer() {
        let mut m = Model::new("c");
        let tag = Tag::new("b1", Some("s0"));
        let b = building(rc1());
        let refs = emit_thermal(&mut m, &b, &[5.0; 4], &[0.0; 4], 19.0, 4, 1.0, &tag).unwrap();
        let ids = emit_comfort(&mut m, &refs, &[19.0; 4], 0.5, &tag).unwrap();
        assert_eq!(ids.len(), 4);
        let c = m.constraint(ids[2]);
        assert!((c.rhs - (18.5 + KELVIN)).abs() < 1e-12);
        assert_eq!(c.sense, ConstraintSense::Ge);
    }

    #[test]
    fn stepping_set_point_steps_the_bound() {
        let mut m = Model::new("c");
        let tag = Tag::new("b1", Some("s0"));
        let refs = emit_thermal(&mut m, &building(rc1()), &[5.0; 4], &[0.0; 4], 17.0, 4, 1.0, &tag)
            .unwrap();
        let ids = emit_comfort(&mut m, &refs, &[17.0, 17.0, 19.0, 19.0], 0.0, &tag).unwrap();
        let rhs: Vec<f64> = ids.iter().map(|&i| m.constraint(i).rhs - KELVIN).collect();
        for (got, want) in rhs.iter().zip([17.0, 17.0, 19.0, 19.0]) {
            assert!((got - want).abs() < 1e-9);
        }
    }

    #[test]
    fn short_climate_is_an_error() {
        let mut m = Model::new("c");
        let tag = Tag::new("b1", None);
        assert!(emit_thermal(&mut m, &building(rc1()), &[5.0; 2], &[0.0; 2], 19.0, 4, 1.0, &tag)
            .is_err());
    }
}
