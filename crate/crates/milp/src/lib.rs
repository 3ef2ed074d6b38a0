//! Solver-neutral MILP model, LP/MPS export and the solve contract.
//!
//! Models are built through [`Model`], exported with [`write_lp`] /
//! [`write_mps`], and solved through a [`Backend`] via [`solve`], which
//! re-checks every returned point against the model.

mod backend;
mod expr;
mod lp;
mod model;
mod mps;
mod solution;

use thiserror::Error;

pub use backend::{
    solve, Backend, CommandBackend, FileFormat, HighsBackend, SolveError, SolveOptions,
    SolveResult, SolveStatus, FEASIBILITY_TOL, OBJECTIVE_TOL,
};
pub use expr::{LinExpr, VarId};
pub use lp::{parse_lp, write_lp};
pub use model::{Constraint, ConstraintId, ConstraintSense, Domain, Model, ModelError, Variable};
pub use mps::{parse_mps, write_mps};
pub use solution::{parse_solution, write_solution, SolutionTable};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unsupported input: {0}")]
    Unsupported(String),
    #[error("invalid model: {0}")]
    Model(#[from] ModelError),
}

impl ParseError {
    pub(crate) fn at(line: usize, msg: impl Into<String>) -> Self {
        ParseError::Syntax {
            line,
            msg: msg.into(),
        }
    }
}
