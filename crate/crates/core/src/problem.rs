//! Assembly of the two-stage model from configuration and scenarios.
//!
//! The same builder serves the centralized problem, the per-building
//! sub-problems of the distributed scheme (other buildings collapsed to a
//! fixed net import), and evaluations with pinned first-stage decisions.

use std::collections::BTreeMap;

use ecplan_milp::{LinExpr, Model, VarId};
use serde::{Deserialize, Serialize};

use crate::devices::{
    emit_boiler, emit_building_balances, emit_community_balance, emit_design,
    emit_heat_pump, emit_hydrogen_design, emit_renewable, emit_roof_coupling, emit_storage,
    pv_yield, stc_yield, BuildingOps, CommunityOps, StorageCaps, StorageParams, UnitDesign,
};
use crate::network::{
    emit_connection, emit_lv_aggregation, emit_lv_aggregation_distributed, emit_lv_limits,
    emit_mv_flows, emit_mv_limits, Connection, MvFlows,
};
use crate::objective::{
    annuity_factor, carbon_cost, investment_cost, operational_cost, slack_cost, ScenarioTerms,
};
use crate::thermal::{emit_comfort, emit_thermal, KELVIN};
use crate::types::{BuildingConfig, CommunityConfig, DeviceKind, Scenario};
use crate::{Error, Tag};

pub const COMMUNITY: &str = "COM";

pub fn entity_name(building: usize) -> String {
    format!("b{building}")
}

/// Final value of one first-stage decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignEntry {
    pub entity: String,
    pub device: DeviceKind,
    pub chi: u8,
    pub value: f64,
}

/// What the builder should emit.
#[derive(Debug, Clone, Default)]
pub struct BuildOptions<'a> {
    /// Building ids that get full blocks; `None` means all.
    pub active: Option<Vec<usize>>,
    /// Per scenario, the net import of all inactive buildings. Required when
    /// `active` leaves any building out.
    pub others_net: Option<&'a [Vec<f64>]>,
    /// Pin first-stage decisions to these values.
    pub fixed_designs: Option<&'a [DesignEntry]>,
}

#[derive(Debug, Clone)]
pub struct BuildingBlock {
    pub id: usize,
    pub designs: Vec<UnitDesign>,
}

/// Second-stage handles of one building in one scenario.
#[derive(Debug, Clone)]
pub struct BuildingScenario {
    pub id: usize,
    pub ops: BuildingOps,
    pub conn: Connection,
    pub s_lv: VarId,
}

#[derive(Debug, Clone)]
pub struct ScenarioBlock {
    pub id: String,
    pub probability: f64,
    pub buildings: Vec<BuildingScenario>,
    pub community: CommunityOps,
    pub mv: MvFlows,
    /// Cost pieces kept apart so that the distributed scheme can attribute
    /// them to their owners.
    pub hv_cost: LinExpr,
    pub gas_cost: BTreeMap<usize, LinExpr>,
    pub co2_cost: BTreeMap<usize, LinExpr>,
    pub s_mv_cost: LinExpr,
    pub s_lv_cost: BTreeMap<usize, LinExpr>,
}

impl ScenarioBlock {
    pub fn terms(&self) -> ScenarioTerms {
        let mut opr = self.hv_cost.clone();
        for e in self.gas_cost.values() {
            opr += e.clone();
        }
        let mut co2 = LinExpr::new();
        for e in self.co2_cost.values() {
            co2 += e.clone();
        }
        let mut slk = self.s_mv_cost.clone();
        for e in self.s_lv_cost.values() {
            slk += e.clone();
        }
        ScenarioTerms {
            probability: self.probability,
            opr,
            co2,
            slk,
        }
    }
}

/// A built model with every handle needed to read results back.
#[derive(Debug)]
pub struct Problem {
    pub model: Model,
    pub step_hours: f64,
    pub horizon: usize,
    pub buildings: Vec<BuildingBlock>,
    pub community: Vec<UnitDesign>,
    pub scenarios: Vec<ScenarioBlock>,
    pub inv_building: BTreeMap<usize, LinExpr>,
    pub inv_community: LinExpr,
}

impl Problem {
    pub fn inv(&self) -> LinExpr {
        let mut e = self.inv_community.clone();
        for x in self.inv_building.values() {
            e += x.clone();
        }
        e
    }

    pub fn scenario_terms(&self) -> Vec<(String, ScenarioTerms)> {
        self.scenarios
            .iter()
            .map(|s| (s.id.clone(), s.terms()))
            .collect()
    }

    /// First-stage decisions read from a solution vector.
    pub fn designs(&self, values: &[f64]) -> Vec<DesignEntry> {
        let mut out = Vec::new();
        let entry = |entity: String, d: &UnitDesign| DesignEntry {
            entity,
            device: d.kind(),
            chi: u8::from(values[d.chi.index()] > 0.5),
            value: values[d.size.index()],
        };
        for b in &self.buildings {
            for d in &b.designs {
                out.push(entry(entity_name(b.id), d));
            }
        }
        for d in &self.community {
            out.push(entry(COMMUNITY.to_string(), d));
        }
        out
    }
}

fn slice<'a>(values: &'a [f64], horizon: usize, what: &str, scenario: &str) -> Result<&'a [f64], Error> {
    values.get(..horizon).ok_or_else(|| {
        Error::Invalid(format!(
            "scenario {scenario}: {what} has {} values, horizon needs {horizon}",
            values.len()
        ))
    })
}

fn pin(model: &mut Model, d: &UnitDesign, fixed: &[DesignEntry], entity: &str) -> Result<(), Error> {
    let e = fixed
        .iter()
        .find(|e| e.entity == entity && e.device == d.kind())
        .ok_or_else(|| {
            Error::Invalid(format!("no fixed design for {entity} {}", d.kind()))
        })?;
    let chi = f64::from(e.chi.min(1));
    let value = e
        .value
        .clamp(chi * d.spec.cap_min, chi * d.spec.cap_max);
    // Several units may share one binary (hydrogen); fix it once.
    if !model.constraint_by_name(&format!("fix_{}", model.var(d.chi).name)).is_some() {
        model.fix(d.chi, chi)?;
    }
    model.fix(d.size, value)?;
    Ok(())
}

fn emit_building_designs(
    model: &mut Model,
    b: &BuildingConfig,
    tag: &Tag,
) -> Result<Vec<UnitDesign>, Error> {
    let mut designs = Vec::new();
    let mut specs: Vec<_> = b.devices.iter().collect();
    specs.sort_by_key(|s| s.kind);
    for spec in specs {
        designs.push(emit_design(model, spec, tag)?);
    }
    let find = |k| designs.iter().find(|d: &&UnitDesign| d.kind() == k);
    emit_roof_coupling(model, find(DeviceKind::PV), find(DeviceKind::STC), b.roof_area, tag)?;
    Ok(designs)
}

fn emit_community_designs(
    model: &mut Model,
    cfg: &CommunityConfig,
    tag: &Tag,
) -> Result<Vec<UnitDesign>, Error> {
    let mut designs = Vec::new();
    for k in [DeviceKind::PV_COM, DeviceKind::BAT_COM] {
        if let Some(spec) = cfg.community_device(k) {
            designs.push(emit_design(model, spec, tag)?);
        }
    }
    if let (Some(el), Some(hyd), Some(fc)) = (
        cfg.community_device(DeviceKind::EL),
        cfg.community_device(DeviceKind::HYD),
        cfg.community_device(DeviceKind::FC),
    ) {
        designs.extend(emit_hydrogen_design(model, el, hyd, fc, tag)?);
    }
    Ok(designs)
}

fn find(designs: &[UnitDesign], k: DeviceKind) -> Option<&UnitDesign> {
    designs.iter().find(|d| d.kind() == k)
}

#[allow(clippy::too_many_arguments)]
fn emit_building_scenario(
    model: &mut Model,
    cfg: &CommunityConfig,
    b: &BuildingConfig,
    designs: &[UnitDesign],
    sc: &Scenario,
    horizon: usize,
    tag: &Tag,
) -> Result<BuildingScenario, Error> {
    let dt = cfg.step_hours;
    let occ = sc.occupant_of(b.id)?;
    let t_amb = slice(&sc.climate.t_amb.values, horizon, "T_amb", &sc.id)?;
    let i_sol = slice(&sc.climate.i_sol.values, horizon, "I_sol", &sc.id)?;
    let t_set = slice(&occ.t_set.values, horizon, "T_set", &sc.id)?;
    let e_base = slice(&occ.e_base.values, horizon, "E_base", &sc.id)?;

    let thermal = emit_thermal(model, b, t_amb, i_sol, t_set[0], horizon, dt, tag)?;
    emit_comfort(model, &thermal, t_set, b.comfort_buffer, tag)?;

    let boiler = find(designs, DeviceKind::BOL)
        .map(|d| emit_boiler(model, d, horizon, tag))
        .transpose()?;
    let heat_pump = find(designs, DeviceKind::HP)
        .map(|d| emit_heat_pump(model, d, t_amb, horizon, tag))
        .transpose()?;
    let storage = |model: &mut Model, k| -> Result<_, Error> {
        find(designs, k)
            .map(|d| {
                emit_storage(
                    model,
                    k,
                    &StorageParams::from_spec(&d.spec),
                    StorageCaps::single(d),
                    horizon,
                    dt,
                    tag,
                )
            })
            .transpose()
    };
    let tes = storage(model, DeviceKind::TES)?;
    let battery = storage(model, DeviceKind::BAT)?;
    let pv = match find(designs, DeviceKind::PV) {
        Some(d) => Some(emit_renewable(model, d, &pv_yield(&d.spec, i_sol)?, horizon, tag)?),
        None => None,
    };
    let stc = match find(designs, DeviceKind::STC) {
        Some(d) => Some(emit_renewable(model, d, &stc_yield(&d.spec, i_sol, t_amb)?, horizon, tag)?),
        None => None,
    };
    let conn = emit_connection(model, horizon, tag)?;
    let ops = BuildingOps {
        thermal,
        boiler,
        heat_pump,
        tes,
        battery,
        pv,
        stc,
        e_in: conn.e_in.clone(),
        e_out: conn.e_out.clone(),
    };
    emit_building_balances(model, &ops, e_base, tag)?;
    let s_lv = emit_lv_limits(model, &conn, cfg.lv_limit, tag)?;
    Ok(BuildingScenario {
        id: b.id,
        ops,
        conn,
        s_lv,
    })
}

fn emit_community_scenario(
    model: &mut Model,
    cfg: &CommunityConfig,
    designs: &[UnitDesign],
    sc: &Scenario,
    horizon: usize,
    tag: &Tag,
) -> Result<CommunityOps, Error> {
    let dt = cfg.step_hours;
    let i_sol = slice(&sc.climate.i_sol.values, horizon, "I_sol", &sc.id)?;
    let pv = match find(designs, DeviceKind::PV_COM) {
        Some(d) => Some(emit_renewable(model, d, &pv_yield(&d.spec, i_sol)?, horizon, tag)?),
        None => None,
    };
    let battery = find(designs, DeviceKind::BAT_COM)
        .map(|d| {
            emit_storage(
                model,
                DeviceKind::BAT_COM,
                &StorageParams::from_spec(&d.spec),
                StorageCaps::single(d),
                horizon,
                dt,
                tag,
            )
        })
        .transpose()?;
    let h2: Vec<&UnitDesign> = [DeviceKind::EL, DeviceKind::HYD, DeviceKind::FC]
        .iter()
        .filter_map(|&k| find(designs, k))
        .collect();
    let hydrogen = if h2.len() == 3 {
        let trio = [h2[0].clone(), h2[1].clone(), h2[2].clone()];
        let p = StorageParams::hydrogen(&trio[0].spec, &trio[1].spec, &trio[2].spec);
        Some(emit_storage(
            model,
            DeviceKind::HYD,
            &p,
            StorageCaps::hydrogen(&trio),
            horizon,
            dt,
            tag,
        )?)
    } else {
        None
    };
    Ok(CommunityOps {
        pv,
        battery,
        hydrogen,
    })
}

/// Builds the two-stage model for `scenarios` (probabilities as given).
pub fn build_problem(
    cfg: &CommunityConfig,
    scenarios: &[Scenario],
    opts: &BuildOptions<'_>,
) -> Result<Problem, Error> {
    let bad = crate::types::validate_config(cfg);
    if let Some(v) = bad.first() {
        return Err(Error::Invalid(format!("configuration: {v}")));
    }
    if scenarios.is_empty() {
        return Err(Error::Invalid("no scenarios".into()));
    }
    let horizon = cfg.horizon_steps;
    for s in scenarios {
        s.check()?;
        if (s.step_hours() - cfg.step_hours).abs() > 1e-12 {
            return Err(Error::Invalid(format!(
                "scenario {} step {} h differs from configured {} h",
                s.id,
                s.step_hours(),
                cfg.step_hours
            )));
        }
    }
    annuity_factor(cfg.discount_rate, 1.0)?;

    let active: Vec<&BuildingConfig> = match &opts.active {
        None => cfg.buildings.iter().collect(),
        Some(ids) => {
            let mut v = Vec::new();
            for id in ids {
                v.push(cfg.buildings.iter().find(|b| b.id == *id).ok_or_else(|| {
                    Error::Invalid(format!("unknown building {id}"))
                })?);
            }
            v
        }
    };
    let partial = active.len() != cfg.buildings.len();
    if partial {
        match opts.others_net {
            Some(o) if o.len() == scenarios.len() => {}
            _ => {
                return Err(Error::Invalid(
                    "a partial build needs others_net for every scenario".into(),
                ))
            }
        }
    }

    let mut model = Model::new("ecplan");
    let mut buildings = Vec::new();
    let mut inv_building = BTreeMap::new();
    for b in &active {
        let tag = Tag::new(entity_name(b.id), None);
        let designs = emit_building_designs(&mut model, b, &tag)?;
        let refs: Vec<&UnitDesign> = designs.iter().collect();
        inv_building.insert(b.id, investment_cost(&refs, cfg.discount_rate)?);
        buildings.push(BuildingBlock { id: b.id, designs });
    }
    let com_tag = Tag::new(COMMUNITY, None);
    let community = emit_community_designs(&mut model, cfg, &com_tag)?;
    let inv_community = investment_cost(&community.iter().collect::<Vec<_>>(), cfg.discount_rate)?;

    if let Some(fixed) = opts.fixed_designs {
        for b in &buildings {
            for d in &b.designs {
                pin(&mut model, d, fixed, &entity_name(b.id))?;
            }
        }
        for d in &community {
            pin(&mut model, d, fixed, COMMUNITY)?;
        }
    }

    let mut blocks = Vec::with_capacity(scenarios.len());
    for (w, sc) in scenarios.iter().enumerate() {
        let scen = format!("s{w}");
        let mut bs = Vec::with_capacity(active.len());
        for (b, block) in active.iter().zip(&buildings) {
            let tag = Tag::new(entity_name(b.id), Some(scen.as_str()));
            bs.push(emit_building_scenario(
                &mut model,
                cfg,
                b,
                &block.designs,
                sc,
                horizon,
                &tag,
            )?);
        }
        let tag = Tag::new(COMMUNITY, Some(scen.as_str()));
        let com = emit_community_scenario(&mut model, cfg, &community, sc, horizon, &tag)?;
        let mv = emit_mv_flows(&mut model, horizon, &tag)?;
        emit_mv_limits(&mut model, &mv, cfg.mv_limit, &tag)?;
        emit_community_balance(&mut model, &com, &mv.mv_to_lv, &mv.lv_to_mv, &mv.hv_in, &tag)?;
        if partial {
            let others = &opts.others_net.unwrap()[w];
            if bs.len() != 1 {
                return Err(Error::Invalid(
                    "a partial build carries exactly one building".into(),
                ));
            }
            emit_lv_aggregation_distributed(&mut model, &bs[0].conn, others, &mv, &tag)?;
        } else {
            let conns: Vec<&Connection> = bs.iter().map(|b| &b.conn).collect();
            emit_lv_aggregation(&mut model, &conns, &mv, &tag)?;
        }

        let dt = cfg.step_hours;
        let p_el = slice(&sc.economic.p_el.values, horizon, "p_el", &sc.id)?;
        let p_gas = slice(&sc.economic.p_gas.values, horizon, "p_gas", &sc.id)?;
        let p_co2 = slice(&sc.economic.p_co2.values, horizon, "p_co2", &sc.id)?;
        let hv_cost = operational_cost(&mv.hv_in, &[], p_el, p_gas, dt);
        let mut gas_cost = BTreeMap::new();
        let mut co2_cost = BTreeMap::new();
        let mut s_lv_cost = BTreeMap::new();
        for b in &bs {
            let gas: Vec<&[VarId]> = b.ops.gas().into_iter().collect();
            gas_cost.insert(b.id, carbon_cost(&gas, p_gas, dt));
            co2_cost.insert(b.id, carbon_cost(&gas, p_co2, dt));
            s_lv_cost.insert(b.id, slack_cost(None, &[b.s_lv], cfg.slack_price));
        }
        let s_mv_cost = slack_cost(Some(mv.s_mv), &[], cfg.slack_price);
        blocks.push(ScenarioBlock {
            id: sc.id.clone(),
            probability: sc.probability,
            buildings: bs,
            community: com,
            mv,
            hv_cost,
            gas_cost,
            co2_cost,
            s_mv_cost,
            s_lv_cost,
        });
    }

    let mut problem = Problem {
        model,
        step_hours: cfg.step_hours,
        horizon,
        buildings,
        community,
        scenarios: blocks,
        inv_building,
        inv_community,
    };
    let objective =
        crate::objective::assemble_two_stage(&problem.inv(), &problem.scenario_terms().into_iter().map(|(_, t)| t).collect::<Vec<_>>());
    problem.model.set_objective(objective)?;
    Ok(problem)
}

/// Converts a model temperature (kelvin) back to °C.
pub fn to_celsius(k: f64) -> f64 {
    k - KELVIN
}
