//! Cost terms and the two-stage objective.

use std::collections::BTreeMap;

use ecplan_milp::{LinExpr, VarId};
use serde::{Deserialize, Serialize};

use crate::devices::UnitDesign;
use crate::Error;

/// Capital recovery factor `r / (1 - (1 + r)^-tau)`.
pub fn annuity_factor(r: f64, tau: f64) -> Result<f64, Error> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Invalid(format!("discount rate {r} must be positive")));
    }
    if !(tau >= 1.0) {
        return Err(Error::Invalid(format!("lifetime {tau} must be at least 1 year")));
    }
    // 1 - (1+r)^-tau evaluated without cancellation
    Ok(r / -(-tau * r.ln_1p()).exp_m1())
}

/// Levelized investment `Σ (a·size + b·chi)·annuity(r, tau)`.
pub fn investment_cost(designs: &[&UnitDesign], r: f64) -> Result<LinExpr, Error> {
    let mut e = LinExpr::with_capacity(2 * designs.len());
    for d in designs {
        let f = annuity_factor(r, d.spec.tau)?;
        e.add_term(d.size, d.spec.a * f).add_term(d.chi, d.spec.b * f);
    }
    Ok(e)
}

/// `Σ_t E_HV(t)·p_el(t)·t_s + Σ_b Σ_t gas_b(t)·p_gas(t)·t_s`.
pub fn operational_cost(
    hv_in: &[VarId],
    gas: &[&[VarId]],
    p_el: &[f64],
    p_gas: &[f64],
    step_hours: f64,
) -> LinExpr {
    let mut e = LinExpr::new();
    for (t, &v) in hv_in.iter().enumerate() {
        e.add_term(v, p_el[t] * step_hours);
    }
    e += carbon_cost(gas, p_gas, step_hours);
    e
}

/// `Σ_b Σ_t gas_b(t)·p_co2(t)·t_s`.
pub fn carbon_cost(gas: &[&[VarId]], p_co2: &[f64], step_hours: f64) -> LinExpr {
    let mut e = LinExpr::new();
    for g in gas {
        for (t, &v) in g.iter().enumerate() {
            e.add_term(v, p_co2[t] * step_hours);
        }
    }
    e
}

/// `p_slk·s_MV + p_slk·Σ_b s_LV,b`.
pub fn slack_cost(s_mv: Option<VarId>, s_lv: &[VarId], p_slk: f64) -> LinExpr {
    let mut e = LinExpr::new();
    for &s in s_mv.iter().chain(s_lv) {
        e.add_term(s, p_slk);
    }
    e
}

/// Second-stage cost expressions of one scenario.
#[derive(Debug, Clone, Default)]
pub struct ScenarioTerms {
    pub probability: f64,
    pub opr: LinExpr,
    pub co2: LinExpr,
    pub slk: LinExpr,
}

impl ScenarioTerms {
    pub fn total(&self) -> LinExpr {
        self.opr.clone() + self.co2.clone() + self.slk.clone()
    }
}

/// `inv + Σ_ω π(ω)·(opr + co2 + slk)(ω)`.
pub fn assemble_two_stage(inv: &LinExpr, scenarios: &[ScenarioTerms]) -> LinExpr {
    let mut e = inv.clone();
    for s in scenarios {
        e.add_scaled(&s.total(), s.probability);
    }
    e
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioCost {
    pub probability: f64,
    #[serde(rename = "O_opr")]
    pub opr: f64,
    #[serde(rename = "O_co2")]
    pub co2: f64,
    #[serde(rename = "O_slk")]
    pub slk: f64,
}

/// Objective split into its terms; the second-stage terms are expectations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    #[serde(rename = "O_inv_lvl")]
    pub inv: f64,
    #[serde(rename = "O_opr")]
    pub opr: f64,
    #[serde(rename = "O_co2")]
    pub co2: f64,
    #[serde(rename = "O_slk")]
    pub slk: f64,
    #[serde(rename = "O_tot")]
    pub tot: f64,
    pub per_scenario: BTreeMap<String, ScenarioCost>,
}

impl ObjectiveBreakdown {
    /// Builds the breakdown from per-scenario costs; `O_tot` is the sum.
    pub fn from_parts(inv: f64, per_scenario: BTreeMap<String, ScenarioCost>) -> Self {
        let mut b = Self {
            inv,
            opr: 0.0,
            co2: 0.0,
            slk: 0.0,
            tot: 0.0,
            per_scenario,
        };
        for c in b.per_scenario.values() {
            b.opr += c.probability * c.opr;
            b.co2 += c.probability * c.co2;
            b.slk += c.probability * c.slk;
        }
        b.tot = b.inv + b.opr + b.co2 + b.slk;
        b
    }

    pub fn evaluate(inv: &LinExpr, scenarios: &[(String, ScenarioTerms)], values: &[f64]) -> Self {
        let per = scenarios
            .iter()
            .map(|(id, s)| {
                (
                    id.clone(),
                    ScenarioCost {
                        probability: s.probability,
                        opr: s.opr.eval(values),
                        co2: s.co2.eval(values),
                        slk: s.slk.eval(values),
                    },
                )
            })
            .collect();
        Self::from_parts(inv.eval(values), per)
    }

    /// Relative gap between `O_tot` and the recombined terms.
    pub fn identity_gap(&self) -> f64 {
        let mut second = 0.0;
        for c in self.per_scenario.values() {
            second += c.probability * (c.opr + c.co2 + c.slk);
        }
        ((self.inv + second) - self.tot).abs() / self.tot.abs().max(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annuity_one_year_is_one_plus_rate() {
        assert_eq!(annuity_factor(0.05, 1.0).unwrap(), 1.05);
    }

    #[test]
    fn annuity_twenty_years() {
        let f = annuity_factor(0.05, 20.0).unwrap();
        assert!((f - 0.080243).abs() < 5e-7, "{f}");
    }

    #[test]
    fn annuity_tends_to_rate() {
        let f = annuity_factor(0.05, 2000.0).unwrap();
        assert!((f - 0.05).abs() < 1e-12);
    }

    #[test]
    fn annuity_rejects_bad_inputs() {
        assert!(annuity_factor(0.0, 10.0).is_err());
        assert!(annuity_factor(-0.1, 10.0).is_err());
        assert!(annuity_factor(0.05, 0.5).is_err());
    }

    #[test]
    fn weighted_sum_of_scenarios() {
        let per: BTreeMap<String, ScenarioCost> = [("a", 0.3, 10.0), ("b", 0.7, 20.0)]
            .into_iter()
            .map(|(id, p, c)| {
                (
                    id.to_string(),
                    ScenarioCost {
                        probability: p,
                        opr: c,
                        co2: 0.0,
                        slk: 0.0,
                    },
                )
            })
            .collect();
        let b = ObjectiveBreakdown::from_parts(5.0, per);
        assert!((b.tot - 22.0).abs() < 1e-12);
        assert!(b.identity_gap() < 1e-12);
    }
}
