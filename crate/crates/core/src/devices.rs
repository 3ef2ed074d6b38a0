//! Device blocks: first-stage sizing, per-scenario operation and the
//! building and community energy balances.

use ecplan_milp::{ConstraintId, ConstraintSense, LinExpr, Model, VarId};
use serde::{Deserialize, Serialize};

use crate::thermal::ThermalRefs;
use crate::types::{DeviceKind, DeviceSpec};
use crate::{Error, Tag};

/// First-stage variables of one unit.
#[derive(Debug, Clone)]
pub struct UnitDesign {
    pub spec: DeviceSpec,
    pub chi: VarId,
    /// Capacity (kW or kWh) or area (m²).
    pub size: VarId,
}

impl UnitDesign {
    pub fn kind(&self) -> DeviceKind {
        self.spec.kind
    }
}

fn design_label(kind: DeviceKind) -> &'static str {
    if kind.sized_by_area() {
        "A"
    } else {
        "C"
    }
}

/// `chi·cap_min <= size <= chi·cap_max` with its own existence binary.
pub fn emit_design(model: &mut Model, spec: &DeviceSpec, tag: &Tag) -> Result<UnitDesign, Error> {
    let chi = model.add_binary(tag.plain(&format!("chi_{}", spec.kind)))?;
    emit_gated_size(model, spec, chi, tag)
}

fn emit_gated_size(
    model: &mut Model,
    spec: &DeviceSpec,
    chi: VarId,
    tag: &Tag,
) -> Result<UnitDesign, Error> {
    let name = tag.plain(&format!("{}_{}", design_label(spec.kind), spec.kind));
    let size = model.add_continuous(name.clone(), Some(spec.cap_max))?;
    model.add_constraint(
        size - spec.cap_max * chi,
        ConstraintSense::Le,
        0.0,
        format!("{name}_max"),
    )?;
    model.add_constraint(
        size - spec.cap_min * chi,
        ConstraintSense::Ge,
        0.0,
        format!("{name}_min"),
    )?;
    Ok(UnitDesign {
        spec: spec.clone(),
        chi,
        size,
    })
}

/// Electrolyzer, tank and fuel cell sized together under one existence
/// binary. Returned in that order.
pub fn emit_hydrogen_design(
    model: &mut Model,
    el: &DeviceSpec,
    hyd: &DeviceSpec,
    fc: &DeviceSpec,
    tag: &Tag,
) -> Result<[UnitDesign; 3], Error> {
    for (s, k) in [(el, DeviceKind::EL), (hyd, DeviceKind::HYD), (fc, DeviceKind::FC)] {
        if s.kind != k {
            return Err(Error::Invalid(format!("expected a {k} spec, got {}", s.kind)));
        }
    }
    let chi = model.add_binary(tag.plain("chi_HYD"))?;
    Ok([
        emit_gated_size(model, el, chi, tag)?,
        emit_gated_size(model, hyd, chi, tag)?,
        emit_gated_size(model, fc, chi, tag)?,
    ])
}

/// `A_PV + A_STC <= roof_area`.
pub fn emit_roof_coupling(
    model: &mut Model,
    pv: Option<&UnitDesign>,
    stc: Option<&UnitDesign>,
    roof_area: f64,
    tag: &Tag,
) -> Result<Option<ConstraintId>, Error> {
    let mut e = LinExpr::new();
    for d in [pv, stc].into_iter().flatten() {
        e.add_term(d.size, 1.0);
    }
    if e.is_empty() {
        return Ok(None);
    }
    Ok(Some(model.add_constraint(
        e,
        ConstraintSense::Le,
        roof_area,
        tag.plain("roof"),
    )?))
}

/// Storage operation: flows per step and the state trajectory (`H + 1`
/// points, `state[0]` the free initial level).
#[derive(Debug, Clone)]
pub struct StorageOps {
    pub kind: DeviceKind,
    pub ch: Vec<VarId>,
    pub dch: Vec<VarId>,
    pub state: Vec<VarId>,
}

/// Parameters of the storage recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageParams {
    pub eta_ch: f64,
    pub eta_dch: f64,
    pub sigma: f64,
    pub gamma_ch: f64,
    pub gamma_dch: f64,
    /// Minimum stored energy while the unit exists.
    pub state_min: f64,
}

impl StorageParams {
    pub fn from_spec(spec: &DeviceSpec) -> Self {
        Self {
            eta_ch: spec.eta_ch,
            eta_dch: spec.eta_dch,
            sigma: spec.sigma,
            gamma_ch: spec.gamma_ch,
            gamma_dch: spec.gamma_dch,
            state_min: spec.extra("state_min").unwrap_or(0.0),
        }
    }

    /// Tank from the tank spec, charging side from the electrolyzer and
    /// discharging side from the fuel cell.
    pub fn hydrogen(el: &DeviceSpec, hyd: &DeviceSpec, fc: &DeviceSpec) -> Self {
        Self {
            eta_ch: el.eta_ch,
            eta_dch: fc.eta_dch,
            sigma: hyd.sigma,
            gamma_ch: el.gamma_ch,
            gamma_dch: fc.gamma_dch,
            state_min: hyd.extra("state_min").unwrap_or(0.0),
        }
    }

    /// One explicit step of the recursion; the reference for replay checks.
    pub fn step(&self, state: f64, ch: f64, dch: f64, step_hours: f64) -> f64 {
        self.sigma * state + step_hours * (self.eta_ch * ch - dch / self.eta_dch)
    }
}

/// Design variables bounding a storage: the state cap, the charging cap and
/// the discharging cap (all the same variable for BAT and TES).
#[derive(Debug, Clone, Copy)]
pub struct StorageCaps {
    pub chi: VarId,
    pub state: VarId,
    pub ch: VarId,
    pub dch: VarId,
}

impl StorageCaps {
    pub fn single(design: &UnitDesign) -> Self {
        Self {
            chi: design.chi,
            state: design.size,
            ch: design.size,
            dch: design.size,
        }
    }

    pub fn hydrogen(designs: &[UnitDesign; 3]) -> Self {
        Self {
            chi: designs[1].chi,
            state: designs[1].size,
            ch: designs[0].size,
            dch: designs[2].size,
        }
    }
}

/// Emits the storage recursion, rate caps, state bounds and the relaxed
/// cyclic condition `E(0) <= E(H)`.
#[allow(clippy::too_many_arguments)]
pub fn emit_storage(
    model: &mut Model,
    kind: DeviceKind,
    p: &StorageParams,
    caps: StorageCaps,
    horizon: usize,
    step_hours: f64,
    tag: &Tag,
) -> Result<StorageOps, Error> {
    if horizon < 2 {
        return Err(Error::Invalid(format!("{kind} needs a horizon of at least 2")));
    }
    let (flow, level) = match kind {
        DeviceKind::TES => ("Q", "Q"),
        _ => ("E", "E"),
    };
    let k = kind.name();
    let mut ch = Vec::with_capacity(horizon);
    let mut dch = Vec::with_capacity(horizon);
    for t in 0..horizon {
        ch.push(model.add_continuous(tag.at(&format!("{flow}ch_{k}"), t), None)?);
        dch.push(model.add_continuous(tag.at(&format!("{flow}dch_{k}"), t), None)?);
    }
    let state: Vec<VarId> = (0..=horizon)
        .map(|t| model.add_continuous(tag.at(&format!("{level}_{k}"), t), None))
        .collect::<Result<_, _>>()?;

    for t in 0..horizon {
        model.add_constraint(
            state[t + 1] - p.sigma * state[t] - (step_hours * p.eta_ch) * ch[t]
                + (step_hours / p.eta_dch) * dch[t],
            ConstraintSense::Eq,
            0.0,
            tag.at(&format!("sot_{k}"), t + 1),
        )?;
        model.add_constraint(
            ch[t] - p.gamma_ch * caps.ch,
            ConstraintSense::Le,
            0.0,
            tag.at(&format!("chmax_{k}"), t),
        )?;
        model.add_constraint(
            dch[t] - p.gamma_dch * caps.dch,
            ConstraintSense::Le,
            0.0,
            tag.at(&format!("dchmax_{k}"), t),
        )?;
    }
    for (t, &e) in state.iter().enumerate() {
        model.add_constraint(
            e - caps.state,
            ConstraintSense::Le,
            0.0,
            tag.at(&format!("Emax_{k}"), t),
        )?;
        if p.state_min > 0.0 {
            model.add_constraint(
                e - p.state_min * caps.chi,
                ConstraintSense::Ge,
                0.0,
                tag.at(&format!("Emin_{k}"), t),
            )?;
        }
    }
    model.add_constraint(
        state[0] - state[horizon],
        ConstraintSense::Le,
        0.0,
        tag.plain(&format!("cyclic_{k}")),
    )?;
    Ok(StorageOps {
        kind,
        ch,
        dch,
        state,
    })
}

/// Input and output of a converter (boiler: gas → heat, heat pump:
/// electricity → heat).
#[derive(Debug, Clone)]
pub struct ConverterOps {
    pub input: Vec<VarId>,
    pub output: Vec<VarId>,
}

/// `Q_BOL = eta_BOL · gas`, `Q_BOL <= C_BOL`.
pub fn emit_boiler(
    model: &mut Model,
    design: &UnitDesign,
    horizon: usize,
    tag: &Tag,
) -> Result<ConverterOps, Error> {
    let eta = design.spec.require("eta_BOL")?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Invalid(format!("eta_BOL = {eta} outside (0, 1]")));
    }
    let cop = vec![eta; horizon];
    emit_converter(model, design, &cop, "Vgas_BOL", "Q_BOL", tag)
}

/// Heat pump performance `α1·exp(α2·ΔT) + α3·exp(α4·ΔT)` with
/// `ΔT = T_dist - T_amb`.
pub fn heat_pump_cop(spec: &DeviceSpec, t_amb: &[f64]) -> Result<Vec<f64>, Error> {
    let a1 = spec.require("alpha_HP_1")?;
    let a2 = spec.require("alpha_HP_2")?;
    let a3 = spec.require("alpha_HP_3")?;
    let a4 = spec.require("alpha_HP_4")?;
    let t_dist = spec.require("T_dist")?;
    t_amb
        .iter()
        .enumerate()
        .map(|(t, &ta)| {
            let gap = t_dist - ta;
            let cop = a1 * (a2 * gap).exp() + a3 * (a4 * gap).exp();
            if cop > 0.0 && cop.is_finite() {
                Ok(cop)
            } else {
                Err(Error::Invalid(format!(
                    "heat pump COP {cop} at step {t} is not positive"
                )))
            }
        })
        .collect()
}

/// `Q_HP = COP(t) · E_HP`, `Q_HP <= C_HP`.
pub fn emit_heat_pump(
    model: &mut Model,
    design: &UnitDesign,
    t_amb: &[f64],
    horizon: usize,
    tag: &Tag,
) -> Result<ConverterOps, Error> {
    if t_amb.len() < horizon {
        return Err(Error::Invalid("ambient temperature shorter than horizon".into()));
    }
    let cop = heat_pump_cop(&design.spec, &t_amb[..horizon])?;
    emit_converter(model, design, &cop, "E_HP", "Q_HP", tag)
}

fn emit_converter(
    model: &mut Model,
    design: &UnitDesign,
    ratio: &[f64],
    input_name: &str,
    output_name: &str,
    tag: &Tag,
) -> Result<ConverterOps, Error> {
    let mut ops = ConverterOps {
        input: Vec::with_capacity(ratio.len()),
        output: Vec::with_capacity(ratio.len()),
    };
    let k = design.kind().name();
    for (t, &r) in ratio.iter().enumerate() {
        let i = model.add_continuous(tag.at(input_name, t), None)?;
        let o = model.add_continuous(tag.at(output_name, t), None)?;
        model.add_constraint(o - r * i, ConstraintSense::Eq, 0.0, tag.at(&format!("conv_{k}"), t))?;
        model.add_constraint(
            o - design.size,
            ConstraintSense::Le,
            0.0,
            tag.at(&format!("cap_{k}"), t),
        )?;
        ops.input.push(i);
        ops.output.push(o);
    }
    Ok(ops)
}

/// PV yield per m² of panel, kW.
pub fn pv_yield(spec: &DeviceSpec, i_sol: &[f64]) -> Result<Vec<f64>, Error> {
    let eta = spec.require("eta_PV")?;
    Ok(i_sol.iter().map(|&i| i * eta / 1000.0).collect())
}

/// Collector yield per m², kW, clamped at zero when losses exceed gains.
pub fn stc_yield(spec: &DeviceSpec, i_sol: &[f64], t_amb: &[f64]) -> Result<Vec<f64>, Error> {
    let eta = spec.require("eta_STC")?;
    let u = spec.require("U_STC")?;
    let t_stc = spec.require("T_STC")?;
    Ok(i_sol
        .iter()
        .zip(t_amb)
        .map(|(&i, &ta)| (eta * (i - u * (t_stc - ta)) / 1000.0).max(0.0))
        .collect())
}

/// `output(t) = yield(t) · size` for a renewable unit.
pub fn emit_renewable(
    model: &mut Model,
    design: &UnitDesign,
    per_unit: &[f64],
    horizon: usize,
    tag: &Tag,
) -> Result<Vec<VarId>, Error> {
    if per_unit.len() < horizon {
        return Err(Error::Invalid("irradiance shorter than horizon".into()));
    }
    let (var, k) = match design.kind() {
        DeviceKind::STC => ("Q_STC", "STC"),
        other => ("E_PV", other.name()),
    };
    let var = if k == "PV_COM" { "E_PVCOM" } else { var };
    (0..horizon)
        .map(|t| {
            let v = model.add_continuous(tag.at(var, t), None)?;
            model.add_constraint(
                v - per_unit[t] * design.size,
                ConstraintSense::Eq,
                0.0,
                tag.at(&format!("yield_{k}"), t),
            )?;
            Ok(v)
        })
        .collect()
}

/// Operation of one building in one scenario.
#[derive(Debug, Clone)]
pub struct BuildingOps {
    pub thermal: ThermalRefs,
    pub boiler: Option<ConverterOps>,
    pub heat_pump: Option<ConverterOps>,
    pub tes: Option<StorageOps>,
    pub battery: Option<StorageOps>,
    pub pv: Option<Vec<VarId>>,
    pub stc: Option<Vec<VarId>>,
    pub e_in: Vec<VarId>,
    pub e_out: Vec<VarId>,
}

impl BuildingOps {
    pub fn gas(&self) -> Option<&[VarId]> {
        self.boiler.as_ref().map(|b| b.input.as_slice())
    }
}

/// Heat and electricity balances of a building, one pair of rows per step.
///
/// Heat: `Q_SP + Q_TES,ch = Q_HP + Q_BOL + Q_TES,dch + Q_STC`.
/// Electricity: `E_base + E_BAT,ch + E_HP + E_out = E_BAT,dch + E_PV + E_in`.
pub fn emit_building_balances(
    model: &mut Model,
    ops: &BuildingOps,
    e_base: &[f64],
    tag: &Tag,
) -> Result<Vec<ConstraintId>, Error> {
    let h = ops.thermal.q_sp.len();
    if e_base.len() < h {
        return Err(Error::Invalid("base load shorter than horizon".into()));
    }
    let mut ids = Vec::with_capacity(2 * h);
    for t in 0..h {
        let mut heat = LinExpr::from(ops.thermal.q_sp[t]);
        if let Some(s) = &ops.tes {
            heat.add_term(s.ch[t], 1.0).add_term(s.dch[t], -1.0);
        }
        for c in [&ops.heat_pump, &ops.boiler].into_iter().flatten() {
            heat.add_term(c.output[t], -1.0);
        }
        if let Some(q) = &ops.stc {
            heat.add_term(q[t], -1.0);
        }
        ids.push(model.add_constraint(heat, ConstraintSense::Eq, 0.0, tag.at("heatbal", t))?);

        let mut el = LinExpr::new();
        el.add_term(ops.e_out[t], 1.0).add_term(ops.e_in[t], -1.0);
        if let Some(b) = &ops.battery {
            el.add_term(b.ch[t], 1.0).add_term(b.dch[t], -1.0);
        }
        if let Some(hp) = &ops.heat_pump {
            el.add_term(hp.input[t], 1.0);
        }
        if let Some(pv) = &ops.pv {
            el.add_term(pv[t], -1.0);
        }
        ids.push(model.add_constraint(el, ConstraintSense::Eq, -e_base[t], tag.at("elbal", t))?);
    }
    Ok(ids)
}

/// Operation of the community utilities in one scenario.
#[derive(Debug, Clone, Default)]
pub struct CommunityOps {
    pub pv: Option<Vec<VarId>>,
    pub battery: Option<StorageOps>,
    pub hydrogen: Option<StorageOps>,
}

/// `E_MV→LV + E_BAT,ch + E_EL,ch = E_LV→MV + E_PV + E_BAT,dch + E_FC,dch + E_HV,in`.
pub fn emit_community_balance(
    model: &mut Model,
    ops: &CommunityOps,
    mv_to_lv: &[VarId],
    lv_to_mv: &[VarId],
    hv_in: &[VarId],
    tag: &Tag,
) -> Result<Vec<ConstraintId>, Error> {
    let h = hv_in.len();
    (0..h)
        .map(|t| {
            let mut e = LinExpr::new();
            e.add_term(mv_to_lv[t], 1.0)
                .add_term(lv_to_mv[t], -1.0)
                .add_term(hv_in[t], -1.0);
            for s in [&ops.battery, &ops.hydrogen].into_iter().flatten() {
                e.add_term(s.ch[t], 1.0).add_term(s.dch[t], -1.0);
            }
            if let Some(pv) = &ops.pv {
                e.add_term(pv[t], -1.0);
            }
            Ok(model.add_constraint(e, ConstraintSense::Eq, 0.0, tag.at("combal", t))?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cop_at_zero_gap_is_sum_of_prefactors() {
        let spec = DeviceSpec::new(DeviceKind::HP, 0.0, 10.0)
            .with_extra("alpha_HP_1", 5.0)
            .with_extra("alpha_HP_2", -0.02)
            .with_extra("alpha_HP_3", 0.7)
            .with_extra("alpha_HP_4", -0.01)
            .with_extra("T_dist", 45.0);
        let cop = heat_pump_cop(&spec, &[45.0, 15.0]).unwrap();
        assert!((cop[0] - 5.7).abs() < 1e-12);
        let oracle = 5.0 * (-0.6f64).exp() + 0.7 * (-0.3f64).exp();
        assert!((cop[1] - oracle).abs() < 1e-12);
    }

    #[test]
    fn non_positive_cop_is_rejected() {
        let spec = DeviceSpec::new(DeviceKind::HP, 0.0, 10.0)
            .with_extra("alpha_HP_1", -1.0)
            .with_extra("alpha_HP_2", 0.0)
            .with_extra("alpha_HP_3", 0.5)
            .with_extra("alpha_HP_4", 0.0)
            .with_extra("T_dist", 45.0);
        assert!(heat_pump_cop(&spec, &[10.0]).is_err());
    }

    #[test]
    fn collector_yield_matches_hand_values() {
        let spec = DeviceSpec::new(DeviceKind::STC, 0.0, 10.0)
            .with_extra("eta_STC", 0.7)
            .with_extra("U_STC", 4.0)
            .with_extra("T_STC", 50.0);
        // 600 W/m², 30 K loss gap → 0.7·480 W/m²; four m² give 1344 W.
        let y = stc_yield(&spec, &[600.0, 120.0, 0.0], &[20.0, 20.0, 5.0]).unwrap();
        assert!((4.0 * y[0] - 1.344).abs() < 1e-12);
        assert_eq!(y[1], 0.0);
        assert_eq!(y[2], 0.0);
    }

    #[test]
    fn pv_yield_matches_hand_value() {
        let spec = DeviceSpec::new(DeviceKind::PV, 0.0, 40.0).with_extra("eta_PV", 0.2);
        let y = pv_yield(&spec, &[500.0, 0.0]).unwrap();
        assert!((10.0 * y[0] - 1.0).abs() < 1e-12);
        assert_eq!(y[1], 0.0);
    }

    #[test]
    fn storage_step_matches_recursion() {
        let p = StorageParams {
            eta_ch: 0.95,
            eta_dch: 0.95,
            sigma: 0.99,
            gamma_ch: 1.0,
            gamma_dch: 1.0,
            state_min: 0.0,
        };
        assert!((p.step(0.0, 1.0, 0.0, 1.0) - 0.95).abs() < 1e-15);
        let mut e = 10.0;
        for _ in 0..3 {
            e = p.step(e, 0.0, 0.0, 1.0);
        }
        assert!((e - 9.70299).abs() < 1e-12);
    }
}
