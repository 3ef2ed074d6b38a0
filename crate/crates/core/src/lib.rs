//! Sizing and operation of energy communities as a two-stage stochastic
//! MILP: building physics, devices, grid, costs, scenario generation and
//! reduction, centralized and distributed solution, and file I/O.

pub mod devices;
pub mod io;
pub mod network;
pub mod objective;
pub mod orchestrator;
pub mod problem;
pub mod scenario;
pub mod thermal;
pub mod types;

use ecplan_milp::{ModelError, SolveError};

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("explicit-Euler step unstable for {pair}: dt/(R*C) = {ratio:.3}")]
    Unstable { pair: String, ratio: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("solver returned {0}")]
    NoSolution(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Parse { path: String, msg: String },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn parse(path: impl AsRef<std::path::Path>, msg: impl std::fmt::Display) -> Self {
        Error::Parse {
            path: path.as_ref().display().to_string(),
            msg: msg.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Builds variable and row names `{var}_{owner}[_{scenario}][_{t}]`.
#[derive(Debug, Clone)]
pub struct Tag {
    prefix: String,
}

impl Tag {
    pub fn new(owner: impl Into<String>, scenario: Option<&str>) -> Self {
        let mut prefix = owner.into();
        if let Some(s) = scenario {
            prefix.push('_');
            prefix.push_str(s);
        }
        Tag { prefix }
    }

    pub fn plain(&self, var: &str) -> String {
        format!("{var}_{}", self.prefix)
    }

    pub fn at(&self, var: &str, t: usize) -> String {
        format!("{var}_{}_{t}", self.prefix)
    }
}
