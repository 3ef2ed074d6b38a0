//! The solver-neutral model: variables, linear constraints and a
//! minimization objective.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};

use thiserror::Error;

use crate::expr::{LinExpr, VarId};

static NEXT_MODEL_ID: AtomicU32 = AtomicU32::new(1);

/// Variable domain. Every continuous variable is non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    ContinuousNonneg,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub domain: Domain,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintSense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for ConstraintSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConstraintSense::Le => "<=",
            ConstraintSense::Eq => "=",
            ConstraintSense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintId(pub(crate) usize);

impl ConstraintId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A linear row `expr sense rhs`; the stored expression carries no constant.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub expr: LinExpr,
    pub sense: ConstraintSense,
    pub rhs: f64,
}

impl Constraint {
    /// Amount by which the row is violated at `values` (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.expr.eval(values);
        match self.sense {
            ConstraintSense::Le => (lhs - self.rhs).max(0.0),
            ConstraintSense::Ge => (self.rhs - lhs).max(0.0),
            ConstraintSense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate constraint name `{0}`")]
    DuplicateConstraint(String),
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("invalid bounds for `{name}`: [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("{context} references a variable that is not registered in this model ({var})")]
    ForeignVariable { context: String, var: VarId },
    #[error("non-finite value in {0}")]
    NonFinite(String),
}

/// Mixed-integer linear model with a minimization objective.
///
/// Variables and constraints keep insertion order; names are unique and
/// retrievable. Cloning a model keeps its identity, so handles stay valid in
/// the clone.
#[derive(Debug, Clone)]
pub struct Model {
    id: u32,
    name: String,
    vars: Vec<Variable>,
    var_names: HashMap<String, VarId>,
    constraints: Vec<Constraint>,
    con_names: HashMap<String, ConstraintId>,
    objective: LinExpr,
}

pub(crate) fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    name.len() <= 255
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '[' | ']' | '#'))
}

impl Model {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            id: NEXT_MODEL_ID.fetch_add(1, Ordering::Relaxed),
            name: name.into(),
            vars: Vec::new(),
            var_names: HashMap::new(),
            constraints: Vec::new(),
            con_names: HashMap::new(),
            objective: LinExpr::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &LinExpr {
        &self.objective
    }

    /// Handle for the `index`-th registered variable.
    pub fn var_at(&self, index: usize) -> VarId {
        assert!(index < self.vars.len(), "variable index out of range");
        VarId {
            model: self.id,
            index: index as u32,
        }
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> + '_ {
        (0..self.vars.len()).map(|i| self.var_at(i))
    }

    pub fn var(&self, v: VarId) -> &Variable {
        &self.vars[v.index()]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.var_names.get(name).copied()
    }

    pub fn constraint(&self, id: ConstraintId) -> &Constraint {
        &self.constraints[id.0]
    }

    pub fn constraint_by_name(&self, name: &str) -> Option<ConstraintId> {
        self.con_names.get(name).copied()
    }

    pub fn owns(&self, v: VarId) -> bool {
        v.model == self.id && v.index() < self.vars.len()
    }

    /// Registers a variable. Continuous variables must have `0 ≤ lower ≤ upper`
    /// (upper may be `+∞`); binaries must have bounds inside `[0, 1]`.
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        domain: Domain,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, ModelError> {
        let name = name.into();
        if !valid_name(&name) {
            return Err(ModelError::InvalidName(name));
        }
        if self.var_names.contains_key(&name) {
            return Err(ModelError::DuplicateVariable(name));
        }
        let bad = lower.is_nan()
            || upper.is_nan()
            || !lower.is_finite()
            || lower < 0.0
            || lower > upper
            || (domain == Domain::Binary && upper > 1.0);
        if bad {
            return Err(ModelError::InvalidBounds {
                name,
                lower,
                upper,
            });
        }
        let id = VarId {
            model: self.id,
            index: self.vars.len() as u32,
        };
        self.var_names.insert(name.clone(), id);
        self.vars.push(Variable {
            name,
            domain,
            lower,
            upper,
        });
        Ok(id)
    }

    /// Shorthand for a non-negative continuous variable with an optional
    /// upper bound.
    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        upper: Option<f64>,
    ) -> Result<VarId, ModelError> {
        self.add_var(
            name,
            Domain::ContinuousNonneg,
            0.0,
            upper.unwrap_or(f64::INFINITY),
        )
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, ModelError> {
        self.add_var(name, Domain::Binary, 0.0, 1.0)
    }

    fn check_expr(&self, expr: &LinExpr, context: &str) -> Result<(), ModelError> {
        for &(v, c) in expr.terms() {
            if !self.owns(v) {
                return Err(ModelError::ForeignVariable {
                    context: context.to_string(),
                    var: v,
                });
            }
            if !c.is_finite() {
                return Err(ModelError::NonFinite(context.to_string()));
            }
        }
        if !expr.constant().is_finite() {
            return Err(ModelError::NonFinite(context.to_string()));
        }
        Ok(())
    }

    /// Appends `expr sense rhs`. Any constant in `expr` is moved to the
    /// right-hand side. An empty expression is accepted as a vacuous row.
    pub fn add_constraint(
        &mut self,
        expr: impl Into<LinExpr>,
        sense: ConstraintSense,
        rhs: f64,
        name: impl Into<String>,
    ) -> Result<ConstraintId, ModelError> {
        let name = name.into();
        let mut expr = expr.into();
        if !valid_name(&name) {
            return Err(ModelError::InvalidName(name));
        }
        if self.con_names.contains_key(&name) {
            return Err(ModelError::DuplicateConstraint(name));
        }
        self.check_expr(&expr, &format!("constraint `{name}`"))?;
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite(format!("rhs of `{name}`")));
        }
        let rhs = rhs - expr.constant();
        expr.set_constant(0.0);
        expr.normalize();
        let id = ConstraintId(self.constraints.len());
        self.con_names.insert(name.clone(), id);
        self.constraints.push(Constraint {
            name,
            expr,
            sense,
            rhs,
        });
        Ok(id)
    }

    /// Pins `var` to `value` through an equality row named `fix_<var>`.
    pub fn fix(&mut self, var: VarId, value: f64) -> Result<ConstraintId, ModelError> {
        let name = format!("fix_{}", self.var(var).name);
        self.add_constraint(var, ConstraintSense::Eq, value, name)
    }

    pub fn set_objective(&mut self, expr: impl Into<LinExpr>) -> Result<(), ModelError> {
        let mut expr = expr.into();
        self.check_expr(&expr, "objective")?;
        expr.normalize();
        self.objective = expr;
        Ok(())
    }

    /// Largest row or bound violation at `values`, with the offending row
    /// when it is a constraint.
    pub fn max_violation(&self, values: &[f64]) -> (f64, Option<ConstraintId>) {
        let mut worst = 0.0;
        let mut at = None;
        for (i, c) in self.constraints.iter().enumerate() {
            let v = c.violation(values);
            if v > worst {
                worst = v;
                at = Some(ConstraintId(i));
            }
        }
        for (var, &x) in self.vars.iter().zip(values) {
            let v = (var.lower - x).max(x - var.upper).max(0.0);
            if v > worst {
                worst = v;
                at = None;
            }
        }
        (worst, at)
    }

    /// Dense vector of objective coefficients, one per column.
    pub fn objective_coefficients(&self) -> Vec<f64> {
        let mut costs = vec![0.0; self.vars.len()];
        for &(v, c) in self.objective.terms() {
            costs[v.index()] += c;
        }
        costs
    }
}
