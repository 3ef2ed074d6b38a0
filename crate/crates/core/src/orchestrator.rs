//! Solving plans: the centralized two-stage problem, the sequential
//! distributed scheme and the one-at-a-time sensitivity study.

use std::collections::BTreeMap;

use ecplan_milp::{solve, Backend, SolveOptions, SolveResult};
use serde::{Deserialize, Serialize};

use crate::objective::{ObjectiveBreakdown, ScenarioCost};
use crate::problem::{build_problem, entity_name, to_celsius, BuildOptions, DesignEntry, Problem};
use crate::scenario::{compose_factor_scenarios, ComposeMode, Factor};
use crate::types::{CommunityConfig, DeviceKind, Scenario, TimeSeries};
use crate::Error;

pub const DEFAULT_EPSILON: f64 = 1.0;
pub const DEFAULT_MAX_ITERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    Centralized,
    Distributed,
    Fixed,
}

/// Second-stage trajectory of one building in one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingTrace {
    pub building: usize,
    /// Indoor temperature (°C).
    pub t_i: Vec<f64>,
    pub q_sp: Vec<f64>,
    pub e_in: Vec<f64>,
    pub e_out: Vec<f64>,
    pub gas: Vec<f64>,
    pub s_lv: f64,
}

impl BuildingTrace {
    pub fn net_import(&self) -> Vec<f64> {
        self.e_in.iter().zip(&self.e_out).map(|(i, o)| i - o).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOperation {
    pub scenario: String,
    pub probability: f64,
    pub hv_in: Vec<f64>,
    pub mv_to_lv: Vec<f64>,
    pub lv_to_mv: Vec<f64>,
    pub s_mv: f64,
    pub buildings: Vec<BuildingTrace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveMeta {
    pub backend: String,
    pub status: String,
    /// Objective reported for the (last) solved model.
    pub solver_objective: f64,
    pub variables: usize,
    pub constraints: usize,
    pub iterations: usize,
    pub converged: bool,
    pub o_tot_history: Vec<f64>,
}

/// Designs, costs and operation of a solved plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub mode: PlanMode,
    pub designs: Vec<DesignEntry>,
    pub breakdown: ObjectiveBreakdown,
    pub operations: Vec<ScenarioOperation>,
    pub meta: SolveMeta,
}

impl PlanResult {
    pub fn design(&self, entity: &str, device: DeviceKind) -> Option<&DesignEntry> {
        self.designs
            .iter()
            .find(|d| d.entity == entity && d.device == device)
    }
}

/// Per-owner pieces of a solved model.
#[derive(Debug, Clone)]
struct BuildingPart {
    designs: Vec<DesignEntry>,
    inv: f64,
    /// Per scenario: gas, carbon and LV-slack cost.
    gas: Vec<f64>,
    co2: Vec<f64>,
    slk: Vec<f64>,
    traces: Vec<BuildingTrace>,
}

impl BuildingPart {
    fn expected(&self, probabilities: &[f64]) -> f64 {
        let mut e = self.inv;
        for (w, p) in probabilities.iter().enumerate() {
            e += p * (self.gas[w] + self.co2[w] + self.slk[w]);
        }
        e
    }
}

#[derive(Debug, Clone)]
struct CommunityPart {
    designs: Vec<DesignEntry>,
    inv: f64,
    hv: Vec<f64>,
    slk: Vec<f64>,
    flows: Vec<(Vec<f64>, Vec<f64>, Vec<f64>, f64)>,
}

fn eval_all(values: &[f64], vars: &[ecplan_milp::VarId]) -> Vec<f64> {
    vars.iter().map(|v| values[v.index()]).collect()
}

fn split(problem: &Problem, values: &[f64]) -> (BTreeMap<usize, BuildingPart>, CommunityPart) {
    let designs = problem.designs(values);
    let mut buildings = BTreeMap::new();
    for b in &problem.buildings {
        let entity = entity_name(b.id);
        let mut part = BuildingPart {
            designs: designs.iter().filter(|d| d.entity == entity).cloned().collect(),
            inv: problem.inv_building[&b.id].eval(values),
            gas: vec![],
            co2: vec![],
            slk: vec![],
            traces: vec![],
        };
        for s in &problem.scenarios {
            part.gas.push(s.gas_cost[&b.id].eval(values));
            part.co2.push(s.co2_cost[&b.id].eval(values));
            part.slk.push(s.s_lv_cost[&b.id].eval(values));
            let bs = s.buildings.iter().find(|x| x.id == b.id).expect("block per building");
            part.traces.push(BuildingTrace {
                building: b.id,
                t_i: eval_all(values, bs.ops.thermal.t_i())
                    .into_iter()
                    .map(to_celsius)
                    .collect(),
                q_sp: eval_all(values, &bs.ops.thermal.q_sp),
                e_in: eval_all(values, &bs.conn.e_in),
                e_out: eval_all(values, &bs.conn.e_out),
                gas: bs.ops.gas().map_or_else(
                    || vec![0.0; problem.horizon],
                    |g| eval_all(values, g),
                ),
                s_lv: values[bs.s_lv.index()],
            });
        }
        buildings.insert(b.id, part);
    }
    let community = CommunityPart {
        designs: designs
            .into_iter()
            .filter(|d| d.entity == crate::problem::COMMUNITY)
            .collect(),
        inv: problem.inv_community.eval(values),
        hv: problem.scenarios.iter().map(|s| s.hv_cost.eval(values)).collect(),
        slk: problem.scenarios.iter().map(|s| s.s_mv_cost.eval(values)).collect(),
        flows: problem
            .scenarios
            .iter()
            .map(|s| {
                (
                    eval_all(values, &s.mv.hv_in),
                    eval_all(values, &s.mv.mv_to_lv),
                    eval_all(values, &s.mv.lv_to_mv),
                    values[s.mv.s_mv.index()],
                )
            })
            .collect(),
    };
    (buildings, community)
}

fn assemble(
    mode: PlanMode,
    scenarios: &[Scenario],
    buildings: &BTreeMap<usize, BuildingPart>,
    community: &CommunityPart,
    meta: SolveMeta,
) -> PlanResult {
    let mut designs: Vec<DesignEntry> = buildings.values().flat_map(|b| b.designs.clone()).collect();
    designs.extend(community.designs.iter().cloned());
    let inv = community.inv + buildings.values().map(|b| b.inv).sum::<f64>();
    let mut per = BTreeMap::new();
    let mut operations = Vec::with_capacity(scenarios.len());
    for (w, sc) in scenarios.iter().enumerate() {
        let mut cost = ScenarioCost {
            probability: sc.probability,
            opr: community.hv[w],
            co2: 0.0,
            slk: community.slk[w],
        };
        for b in buildings.values() {
            cost.opr += b.gas[w];
            cost.co2 += b.co2[w];
            cost.slk += b.slk[w];
        }
        per.insert(sc.id.clone(), cost);
        let (hv_in, mv_to_lv, lv_to_mv, s_mv) = community.flows[w].clone();
        operations.push(ScenarioOperation {
            scenario: sc.id.clone(),
            probability: sc.probability,
            hv_in,
            mv_to_lv,
            lv_to_mv,
            s_mv,
            buildings: buildings.values().map(|b| b.traces[w].clone()).collect(),
        });
    }
    PlanResult {
        mode,
        designs,
        breakdown: ObjectiveBreakdown::from_parts(inv, per),
        operations,
        meta,
    }
}

fn run(problem: &Problem, backend: &dyn Backend, opts: &SolveOptions) -> Result<SolveResult, Error> {
    let res = solve(&problem.model, backend, opts)?;
    if !res.has_point() {
        return Err(Error::NoSolution(res.status.to_string()));
    }
    Ok(res)
}

fn meta(problem: &Problem, res: &SolveResult, backend: &dyn Backend) -> SolveMeta {
    SolveMeta {
        backend: backend.name().to_string(),
        status: res.status.to_string(),
        solver_objective: res.objective.unwrap_or(f64::NAN),
        variables: problem.model.num_vars(),
        constraints: problem.model.num_constraints(),
        iterations: 1,
        converged: true,
        o_tot_history: vec![],
    }
}

fn solve_whole(
    mode: PlanMode,
    cfg: &CommunityConfig,
    scenarios: &[Scenario],
    build: &BuildOptions<'_>,
    backend: &dyn Backend,
    opts: &SolveOptions,
) -> Result<PlanResult, Error> {
    let problem = build_problem(cfg, scenarios, build)?;
    let res = run(&problem, backend, opts)?;
    let (b, c) = split(&problem, &res.values);
    let plan = assemble(mode, scenarios, &b, &c, meta(&problem, &res, backend));
    let gap = (plan.breakdown.tot - plan.meta.solver_objective).abs()
        / plan.meta.solver_objective.abs().max(1.0);
    if gap > 1e-6 {
        return Err(Error::Invalid(format!(
            "cost breakdown {} disagrees with solver objective {}",
            plan.breakdown.tot, plan.meta.solver_objective
        )));
    }
    Ok(plan)
}

/// Solves the full two-stage problem in one model.
pub fn plan_centralized(
    cfg: &CommunityConfig,
    scenarios: &[Scenario],
    backend: &dyn Backend,
    opts: &SolveOptions,
) -> Result<PlanResult, Error> {
    solve_whole(PlanMode::Centralized, cfg, scenarios, &BuildOptions::default(), backend, opts)
}

/// Solves the second stage with every first-stage decision pinned.
pub fn evaluate_designs(
    cfg: &CommunityConfig,
    scenarios: &[Scenario],
    designs: &[DesignEntry],
    backend: &dyn Backend,
    opts: &SolveOptions,
) -> Result<PlanResult, Error> {
    let build = BuildOptions {
        fixed_designs: Some(designs),
        ..Default::default()
    };
    solve_whole(PlanMode::Fixed, cfg, scenarios, &build, backend, opts)
}

/// Probability-weighted mean of all profiles, as one scenario.
pub fn expected_value_scenario(scenarios: &[Scenario]) -> Result<Scenario, Error> {
    let aligned = crate::types::align_scenarios(scenarios.to_vec())?;
    let first = &aligned[0];
    let avg = |pick: &dyn Fn(&Scenario) -> &TimeSeries| -> TimeSeries {
        let mut ts = pick(first).clone();
        for (t, v) in ts.values.iter_mut().enumerate() {
            *v = aligned.iter().map(|s| s.probability * pick(s).values[t]).sum();
        }
        ts
    };
    let mut ev = first.clone();
    ev.id = "expected".into();
    ev.probability = 1.0;
    ev.economic.p_el = avg(&|s| &s.economic.p_el);
    ev.economic.p_gas = avg(&|s| &s.economic.p_gas);
    ev.economic.p_co2 = avg(&|s| &s.economic.p_co2);
    ev.climate.t_amb = avg(&|s| &s.climate.t_amb);
    ev.climate.i_sol = avg(&|s| &s.climate.i_sol);
    for b in first.occupant.keys().copied().collect::<Vec<_>>() {
        let o = ev.occupant.get_mut(&b).expect("key from the same map");
        o.e_base = avg(&|s: &Scenario| &s.occupant[&b].e_base);
        o.t_set = avg(&|s: &Scenario| &s.occupant[&b].t_set);
    }
    Ok(ev)
}

/// Expected optimum when each scenario is known in advance.
pub fn wait_and_see(
    cfg: &CommunityConfig,
    scenarios: &[Scenario],
    backend: &dyn Backend,
    opts: &SolveOptions,
) -> Result<f64, Error> {
    let mut total = 0.0;
    for s in scenarios {
        let mut single = s.clone();
        single.probability = 1.0;
        total += s.probability * plan_centralized(cfg, &[single], backend, opts)?.breakdown.tot;
    }
    Ok(total)
}

/// State carried between sweeps of the distributed scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordinationState {
    /// Per building and scenario, the summed net import of all other
    /// buildings as last seen by that building's sub-problem.
    pub others_net: BTreeMap<usize, Vec<Vec<f64>>>,
    pub o_tot_history: Vec<f64>,
    pub epsilon: f64,
    pub max_iters: usize,
}

pub fn initialize_coordination(
    cfg: &CommunityConfig,
    scenarios: &[Scenario],
    epsilon: f64,
    max_iters: usize,
) -> Result<CoordinationState, Error> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Invalid(format!("epsilon {epsilon} must be positive")));
    }
    if max_iters == 0 {
        return Err(Error::Invalid("max_iters must be positive".into()));
    }
    Ok(CoordinationState {
        others_net: cfg
            .buildings
            .iter()
            .map(|b| (b.id, vec![vec![0.0; cfg.horizon_steps]; scenarios.len()]))
            .collect(),
        o_tot_history: Vec::new(),
        epsilon,
        max_iters,
    })
}

/// Sequential scheme: each building, together with the community
/// utilities and the grid, is optimized against the latest net flows of
/// all other buildings. Sweeps run in ascending building id until the
/// global objective changes by at most `epsilon` between sweeps.
///
/// The best sweep is returned; `meta.converged` is false when `max_iters`
/// ran out first.
pub fn plan_distributed(
    cfg: &CommunityConfig,
    scenarios: &[Scenario],
    epsilon: f64,
    max_iters: usize,
    backend: &dyn Backend,
    opts: &SolveOptions,
) -> Result<PlanResult, Error> {
    let mut state = initialize_coordination(cfg, scenarios, epsilon, max_iters)?;
    let mut ids: Vec<usize> = cfg.buildings.iter().map(|b| b.id).collect();
    ids.sort_unstable();
    let probabilities: Vec<f64> = scenarios.iter().map(|s| s.probability).collect();
    let horizon = cfg.horizon_steps;

    let mut parts: BTreeMap<usize, BuildingPart> = BTreeMap::new();
    let mut best: Option<PlanResult> = None;
    let mut last_meta = None;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_iters && !converged {
        sweeps += 1;
        let mut community = None;
        for &b in &ids {
            let others: Vec<Vec<f64>> = (0..scenarios.len())
                .map(|w| {
                    let mut net = vec![0.0; horizon];
                    for (id, p) in &parts {
                        if *id != b {
                            for (t, v) in p.traces[w].net_import().into_iter().enumerate() {
                                net[t] += v;
                            }
                        }
                    }
                    net
                })
                .collect();
            state.others_net.insert(b, others.clone());
            let build = BuildOptions {
                active: Some(vec![b]),
                others_net: Some(&others),
                fixed_designs: None,
            };
            let problem = if ids.len() == 1 {
                build_problem(cfg, scenarios, &BuildOptions::default())?
            } else {
                build_problem(cfg, scenarios, &build)?
            };
            let res = run(&problem, backend, opts)?;
            let (mut bp, cp) = split(&problem, &res.values);
            let own = bp.remove(&b).expect("active building solved");
            log::debug!(
                "sweep {sweeps} building {b}: sub-objective {:.6}, own share {:.6}",
                res.objective.unwrap_or(f64::NAN),
                own.expected(&probabilities)
            );
            parts.insert(b, own);
            last_meta = Some(meta(&problem, &res, backend));
            community = Some(cp);
        }
        let community = community.expect("at least one building");
        let mut m = last_meta.clone().expect("at least one solve");
        let plan_meta = SolveMeta {
            iterations: sweeps,
            ..m.clone()
        };
        let plan = assemble(PlanMode::Distributed, scenarios, &parts, &community, plan_meta);
        let o_tot = plan.breakdown.tot;
        if let Some(&prev) = state.o_tot_history.last() {
            converged = (o_tot - prev).abs() <= epsilon;
        }
        state.o_tot_history.push(o_tot);
        if best.as_ref().is_none_or(|p| o_tot < p.breakdown.tot) {
            best = Some(plan);
        }
        m.iterations = sweeps;
        last_meta = Some(m);
    }
    let mut plan = best.expect("at least one sweep");
    plan.meta.iterations = sweeps;
    plan.meta.converged = converged || ids.len() == 1;
    plan.meta.o_tot_history = state.o_tot_history;
    if !plan.meta.converged {
        log::warn!("distributed scheme stopped after {max_iters} sweeps without converging");
    }
    Ok(plan)
}

/// One deterministic solve of the sensitivity study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityCase {
    pub factor: Factor,
    pub member: String,
    pub scenario: String,
    /// `optimal`, `limit`, or the failure reason.
    pub status: String,
    pub objective: Option<f64>,
    pub designs: Vec<DesignEntry>,
}

/// Spread of one design value across the members of one factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpreadRow {
    pub factor: Factor,
    pub entity: String,
    pub device: DeviceKind,
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
    /// Value in the stochastic optimum.
    pub reference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub reference: Vec<DesignEntry>,
    pub reference_objective: f64,
    pub cases: Vec<SensitivityCase>,
    pub spread: Vec<SpreadRow>,
}

/// One-at-a-time study over `factors`, with the stochastic optimum of
/// `joint` as reference. A supplied `reference` plan is reused as is.
pub fn run_sensitivity(
    cfg: &CommunityConfig,
    joint: &[Scenario],
    factors: &[Factor],
    reference: Option<&PlanResult>,
    backend: &dyn Backend,
    opts: &SolveOptions,
) -> Result<SensitivityReport, Error> {
    let owned;
    let reference = match reference {
        Some(r) => r,
        None => {
            owned = plan_centralized(cfg, joint, backend, opts)?;
            &owned
        }
    };
    let mut cases = Vec::new();
    for case in compose_factor_scenarios(joint, ComposeMode::OneAtATime)? {
        let factor = case.factor.expect("one-at-a-time cases carry a factor");
        if !factors.contains(&factor) {
            continue;
        }
        let scenario = case.scenarios[0].id.clone();
        let member = case.member.clone().unwrap_or_default();
        let (status, objective, designs) = match plan_centralized(cfg, &case.scenarios, backend, opts) {
            Ok(p) => (p.meta.status.clone(), Some(p.breakdown.tot), p.designs),
            Err(Error::NoSolution(s)) => {
                log::warn!("sensitivity case {scenario}: {s}");
                (s, None, vec![])
            }
            Err(e) => return Err(e),
        };
        cases.push(SensitivityCase {
            factor,
            member,
            scenario,
            status,
            objective,
            designs,
        });
    }
    let mut spread = Vec::new();
    for &f in factors {
        for r in &reference.designs {
            let vals: Vec<f64> = cases
                .iter()
                .filter(|c| c.factor == f && c.objective.is_some())
                .filter_map(|c| {
                    c.designs
                        .iter()
                        .find(|d| d.entity == r.entity && d.device == r.device)
                        .map(|d| d.value)
                })
                .collect();
            let n = vals.len();
            let (min, max, mean, std) = if n == 0 {
                (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
            } else {
                let mean = vals.iter().sum::<f64>() / n as f64;
                let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
                (
                    vals.iter().copied().fold(f64::INFINITY, f64::min),
                    vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    mean,
                    var.sqrt(),
                )
            };
            spread.push(SpreadRow {
                factor: f,
                entity: r.entity.clone(),
                device: r.device,
                n,
                min,
                max,
                mean,
                std,
                reference: r.value,
            });
        }
    }
    Ok(SensitivityReport {
        reference: reference.designs.clone(),
        reference_objective: reference.breakdown.tot,
        cases,
        spread,
    })
}
