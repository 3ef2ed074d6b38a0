//! Grid connections, line limits with penalized slacks, and the LV
//! aggregation balance (centralized and with a fixed remainder).

use ecplan_milp::{ConstraintId, ConstraintSense, LinExpr, Model, VarId};

use crate::{Error, Tag};

/// Import and export of one building at its LV connection.
#[derive(Debug, Clone)]
pub struct Connection {
    pub e_in: Vec<VarId>,
    pub e_out: Vec<VarId>,
}

pub fn emit_connection(model: &mut Model, horizon: usize, tag: &Tag) -> Result<Connection, Error> {
    let mut c = Connection {
        e_in: Vec::with_capacity(horizon),
        e_out: Vec::with_capacity(horizon),
    };
    for t in 0..horizon {
        c.e_in.push(model.add_continuous(tag.at("E_in", t), None)?);
        c.e_out.push(model.add_continuous(tag.at("E_out", t), None)?);
    }
    Ok(c)
}

/// MV-level flows of one scenario.
#[derive(Debug, Clone)]
pub struct MvFlows {
    pub mv_to_lv: Vec<VarId>,
    pub lv_to_mv: Vec<VarId>,
    pub hv_in: Vec<VarId>,
    /// One MV slack shared by both directions and all steps.
    pub s_mv: VarId,
}

pub fn emit_mv_flows(model: &mut Model, horizon: usize, tag: &Tag) -> Result<MvFlows, Error> {
    let mut f = MvFlows {
        mv_to_lv: Vec::with_capacity(horizon),
        lv_to_mv: Vec::with_capacity(horizon),
        hv_in: Vec::with_capacity(horizon),
        s_mv: model.add_continuous(tag.plain("s_MV"), None)?,
    };
    for t in 0..horizon {
        f.mv_to_lv.push(model.add_continuous(tag.at("E_MVLV", t), None)?);
        f.lv_to_mv.push(model.add_continuous(tag.at("E_LVMV", t), None)?);
        f.hv_in.push(model.add_continuous(tag.at("E_HV", t), None)?);
    }
    Ok(f)
}

/// `E_MV→LV, E_LV→MV <= Ē_MV + s_MV` for every step.
pub fn emit_mv_limits(
    model: &mut Model,
    mv: &MvFlows,
    mv_limit: f64,
    tag: &Tag,
) -> Result<Vec<ConstraintId>, Error> {
    let mut ids = Vec::with_capacity(2 * mv.hv_in.len());
    for t in 0..mv.hv_in.len() {
        ids.push(model.add_constraint(
            mv.mv_to_lv[t] - mv.s_mv,
            ConstraintSense::Le,
            mv_limit,
            tag.at("maxMV_down", t),
        )?);
        ids.push(model.add_constraint(
            mv.lv_to_mv[t] - mv.s_mv,
            ConstraintSense::Le,
            mv_limit,
            tag.at("maxMV_up", t),
        )?);
    }
    Ok(ids)
}

/// `E_in, E_out <= Ē_LV + s_LV` for one building; returns its slack.
pub fn emit_lv_limits(
    model: &mut Model,
    conn: &Connection,
    lv_limit: f64,
    tag: &Tag,
) -> Result<VarId, Error> {
    let s = model.add_continuous(tag.plain("s_LV"), None)?;
    for t in 0..conn.e_in.len() {
        model.add_constraint(conn.e_in[t] - s, ConstraintSense::Le, lv_limit, tag.at("maxLV_in", t))?;
        model.add_constraint(
            conn.e_out[t] - s,
            ConstraintSense::Le,
            lv_limit,
            tag.at("maxLV_out", t),
        )?;
    }
    Ok(s)
}

/// `E_MV→LV + Σ E_out = Σ E_in + E_LV→MV` per step.
pub fn emit_lv_aggregation(
    model: &mut Model,
    buildings: &[&Connection],
    mv: &MvFlows,
    tag: &Tag,
) -> Result<Vec<ConstraintId>, Error> {
    emit_lv_balance(model, buildings, None, mv, tag)
}

/// Aggregation for one sub-problem: the other buildings enter as the fixed
/// net import series `others_net(t) = Σ (E_in - E_out)`.
pub fn emit_lv_aggregation_distributed(
    model: &mut Model,
    own: &Connection,
    others_net: &[f64],
    mv: &MvFlows,
    tag: &Tag,
) -> Result<Vec<ConstraintId>, Error> {
    if others_net.len() < mv.hv_in.len() {
        return Err(Error::Invalid("others_net shorter than horizon".into()));
    }
    emit_lv_balance(model, &[own], Some(others_net), mv, tag)
}

fn emit_lv_balance(
    model: &mut Model,
    buildings: &[&Connection],
    others_net: Option<&[f64]>,
    mv: &MvFlows,
    tag: &Tag,
) -> Result<Vec<ConstraintId>, Error> {
    (0..mv.hv_in.len())
        .map(|t| {
            let mut e = LinExpr::with_capacity(2 + 2 * buildings.len());
            e.add_term(mv.mv_to_lv[t], 1.0).add_term(mv.lv_to_mv[t], -1.0);
            for c in buildings {
                e.add_term(c.e_out[t], 1.0).add_term(c.e_in[t], -1.0);
            }
            let rhs = others_net.map_or(0.0, |o| o[t]);
            Ok(model.add_constraint(e, ConstraintSense::Eq, rhs, tag.at("lvbal", t))?)
        })
        .collect()
}
