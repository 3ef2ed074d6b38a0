//! Solve contract and the two shipped backends.
//!
//! [`HighsBackend`] links HiGHS in-process. [`CommandBackend`] writes the
//! model to disk, runs an arbitrary solver command and reads back a solution
//! table; it is the portable path.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use highs::{ColProblem, HighsModelStatus, HighsSolutionStatus, Sense};
use thiserror::Error;

use crate::lp::write_lp;
use crate::model::{ConstraintSense, Domain, Model};
use crate::mps::write_mps;
use crate::solution::parse_solution;
use crate::ParseError;

/// Absolute feasibility tolerance, scaled by the magnitude of each row.
pub const FEASIBILITY_TOL: f64 = 1e-6;
/// Relative tolerance between reported and recomputed objective.
pub const OBJECTIVE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    Limit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Limit => "limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub time_limit_s: Option<f64>,
    pub mip_gap: f64,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            time_limit_s: None,
            mip_gap: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Objective recomputed from `values`; `None` when no point is available.
    pub objective: Option<f64>,
    /// Column values in model order; empty when no point is available.
    pub values: Vec<f64>,
    pub meta: BTreeMap<String, String>,
}

impl SolveResult {
    fn without_point(status: SolveStatus) -> Self {
        Self {
            status,
            objective: None,
            values: Vec::new(),
            meta: BTreeMap::new(),
        }
    }

    pub fn has_point(&self) -> bool {
        !self.values.is_empty()
    }

    /// Value of `var`, or zero when the result carries no point.
    pub fn value(&self, var: crate::VarId) -> f64 {
        self.values.get(var.index()).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("failed to launch solver: {0}")]
    Launch(String),
    #[error("solver failed: {0}")]
    Backend(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot read solution: {0}")]
    Solution(#[from] ParseError),
    #[error("reported objective {reported} differs from recomputed {recomputed}")]
    ObjectiveMismatch { reported: f64, recomputed: f64 },
    #[error("solution violates constraint `{constraint}` by {violation}")]
    Infeasible { constraint: String, violation: f64 },
    #[error("solver returned {got} values for {expected} columns")]
    Arity { got: usize, expected: usize },
}

/// A MILP solver. Implementations report the raw outcome; [`solve`] checks it.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn run(&self, model: &Model, options: &SolveOptions) -> Result<SolveResult, SolveError>;
}

/// Solves `model` and validates the returned point against it.
///
/// The objective in the result is always recomputed from the values, and a
/// point flagged optimal must satisfy every row.
pub fn solve(
    model: &Model,
    backend: &dyn Backend,
    options: &SolveOptions,
) -> Result<SolveResult, SolveError> {
    let started = Instant::now();
    let mut res = backend.run(model, options)?;
    res.meta.insert("backend".into(), backend.name().to_string());
    res.meta
        .insert("wall_s".into(), format!("{:.3}", started.elapsed().as_secs_f64()));
    if !res.has_point() {
        res.objective = None;
        return Ok(res);
    }
    if res.values.len() != model.num_vars() {
        return Err(SolveError::Arity {
            got: res.values.len(),
            expected: model.num_vars(),
        });
    }
    let recomputed = model.objective().eval(&res.values);
    if let Some(reported) = res.objective {
        if (reported - recomputed).abs() > OBJECTIVE_TOL * recomputed.abs().max(1.0) {
            return Err(SolveError::ObjectiveMismatch {
                reported,
                recomputed,
            });
        }
    }
    res.objective = Some(recomputed);

    let mut worst = 0.0f64;
    for c in model.constraints() {
        let v = c.violation(&res.values);
        let scale = c
            .expr
            .terms()
            .iter()
            .map(|&(x, a)| (a * res.values[x.index()]).abs())
            .fold(c.rhs.abs(), f64::max)
            .max(1.0);
        let rel = v / scale;
        worst = worst.max(v);
        if res.status == SolveStatus::Optimal && rel > FEASIBILITY_TOL {
            return Err(SolveError::Infeasible {
                constraint: c.name.clone(),
                violation: v,
            });
        }
    }
    res.meta.insert("max_violation".into(), format!("{worst:e}"));
    Ok(res)
}

/// In-process HiGHS.
#[derive(Debug, Clone, Default)]
pub struct HighsBackend {
    /// Pin the thread count (useful for reproducible MIP runs).
    pub threads: Option<u32>,
}

impl HighsBackend {
    fn build(model: &Model) -> ColProblem {
        let mut pb = ColProblem::default();
        let rows: Vec<_> = model
            .constraints()
            .iter()
            .map(|c| match c.sense {
                ConstraintSense::Le => pb.add_row(..=c.rhs),
                ConstraintSense::Ge => pb.add_row(c.rhs..),
                ConstraintSense::Eq => pb.add_row(c.rhs..=c.rhs),
            })
            .collect();
        let mut cols: Vec<Vec<(highs::Row, f64)>> = vec![Vec::new(); model.num_vars()];
        for (r, c) in model.constraints().iter().enumerate() {
            for &(v, a) in c.expr.terms() {
                cols[v.index()].push((rows[r], a));
            }
        }
        let costs = model.objective_coefficients();
        for ((var, entries), cost) in model.variables().iter().zip(cols).zip(costs) {
            let integer = var.domain == Domain::Binary;
            if var.upper.is_finite() {
                pb.add_column_with_integrality(cost, var.lower..=var.upper, entries, integer);
            } else {
                pb.add_column_with_integrality(cost, var.lower.., entries, integer);
            }
        }
        pb
    }

    fn attempt(
        &self,
        model: &Model,
        options: &SolveOptions,
        presolve: bool,
    ) -> Result<(HighsModelStatus, SolveResult), SolveError> {
        let mut hm = Self::build(model).optimise(Sense::Minimise);
        hm.make_quiet();
        hm.set_option("output_flag", false);
        hm.set_option("mip_rel_gap", options.mip_gap);
        hm.set_option("primal_feasibility_tolerance", 1e-7);
        hm.set_option("mip_feasibility_tolerance", 1e-7);
        hm.set_option("random_seed", (options.seed % i32::MAX as u64) as i32);
        if let Some(t) = options.time_limit_s {
            hm.set_option("time_limit", t);
        }
        if let Some(n) = self.threads {
            hm.set_option("threads", n as i32);
        }
        if !presolve {
            hm.set_option("presolve", "off");
        }
        let solved = hm
            .try_solve()
            .map_err(|e| SolveError::Backend(format!("HiGHS run failed: {e:?}")))?;
        let raw = solved.status();
        let has_point = solved.primal_solution_status() == HighsSolutionStatus::Feasible;
        let status = match raw {
            HighsModelStatus::Optimal | HighsModelStatus::ModelEmpty => SolveStatus::Optimal,
            HighsModelStatus::Infeasible => SolveStatus::Infeasible,
            HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
                SolveStatus::Unbounded
            }
            HighsModelStatus::ReachedTimeLimit
            | HighsModelStatus::ReachedIterationLimit
            | HighsModelStatus::ReachedSolutionLimit
            | HighsModelStatus::ReachedInterrupt
            | HighsModelStatus::ReachedMemoryLimit
            | HighsModelStatus::ObjectiveBound
            | HighsModelStatus::ObjectiveTarget => SolveStatus::Limit,
            other => {
                return Err(SolveError::Backend(format!(
                    "HiGHS ended with status {other:?}"
                )))
            }
        };
        let mut res = SolveResult::without_point(status);
        if matches!(status, SolveStatus::Optimal | SolveStatus::Limit)
            && (has_point || model.num_vars() == 0 || raw == HighsModelStatus::ModelEmpty)
        {
            res.values = solved.get_solution().columns().to_vec();
            if res.values.len() < model.num_vars() {
                res.values.resize(model.num_vars(), 0.0);
            }
            res.objective = Some(solved.objective_value() + model.objective().constant());
        }
        if model.variables().iter().any(|v| v.domain == Domain::Binary) {
            if let Ok(gap) = solved.double_info_value(c"mip_gap") {
                res.meta.insert("mip_gap".into(), format!("{gap:e}"));
            }
        }
        res.meta.insert("highs_status".into(), format!("{raw:?}"));
        Ok((raw, res))
    }
}

impl Backend for HighsBackend {
    fn name(&self) -> &str {
        "highs"
    }

    fn run(&self, model: &Model, options: &SolveOptions) -> Result<SolveResult, SolveError> {
        if model.num_vars() == 0 {
            // HiGHS reports an empty model; all rows are constants.
            let feasible = model.constraints().iter().all(|c| c.violation(&[]) <= 0.0);
            let mut res = SolveResult::without_point(if feasible {
                SolveStatus::Optimal
            } else {
                SolveStatus::Infeasible
            });
            if feasible {
                res.objective = Some(model.objective().constant());
            }
            return Ok(res);
        }
        let (raw, res) = self.attempt(model, options, true)?;
        if raw == HighsModelStatus::UnboundedOrInfeasible {
            // Presolve cannot always tell the two apart; the plain solve can.
            let (_, res) = self.attempt(model, options, false)?;
            return Ok(res);
        }
        Ok(res)
    }
}

/// File format handed to an external solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileFormat {
    Lp,
    Mps,
}

/// External solver driven through a shell command template.
///
/// Placeholders: `{model}`, `{solution}`, `{time_limit}`, `{mip_gap}`,
/// `{seed}`. The command must write a solution table to `{solution}`.
#[derive(Debug, Clone)]
pub struct CommandBackend {
    pub template: String,
    pub format: FileFormat,
    /// Extra wall time granted beyond the solver time limit before the
    /// process is killed.
    pub grace: Duration,
}

impl CommandBackend {
    pub fn new(template: impl Into<String>) -> Self {
        Self {
            template: template.into(),
            format: FileFormat::Lp,
            grace: Duration::from_secs(5),
        }
    }

    pub fn with_format(mut self, format: FileFormat) -> Self {
        self.format = format;
        self
    }

    fn render(&self, model: &Path, solution: &Path, options: &SolveOptions) -> String {
        let tl = options
            .time_limit_s
            .map(|t| t.to_string())
            .unwrap_or_else(|| "inf".into());
        self.template
            .replace("{model}", &shell_quote(&model.to_string_lossy()))
            .replace("{solution}", &shell_quote(&solution.to_string_lossy()))
            .replace("{time_limit}", &tl)
            .replace("{mip_gap}", &options.mip_gap.to_string())
            .replace("{seed}", &options.seed.to_string())
    }
}

fn shell_quote(s: &str) -> String {
    format!("'{}'", s.replace('\'', r"'\''"))
}

impl Backend for CommandBackend {
    fn name(&self) -> &str {
        "command"
    }

    fn run(&self, model: &Model, options: &SolveOptions) -> Result<SolveResult, SolveError> {
        let dir = tempfile::tempdir()?;
        let (file, text) = match self.format {
            FileFormat::Lp => ("model.lp", write_lp(model)),
            FileFormat::Mps => ("model.mps", write_mps(model)),
        };
        let model_path = dir.path().join(file);
        let sol_path = dir.path().join("solution.sol");
        std::fs::write(&model_path, text)?;
        let err_path = dir.path().join("stderr.txt");
        let cmd = self.render(&model_path, &sol_path, options);
        log::debug!("running solver: {cmd}");

        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(std::fs::File::create(&err_path)?)
            .spawn()
            .map_err(|e| SolveError::Launch(format!("{cmd}: {e}")))?;
        let deadline = options
            .time_limit_s
            .map(|t| Instant::now() + Duration::from_secs_f64(t.max(0.0)) + self.grace);
        let status = loop {
            if let Some(st) = child.try_wait()? {
                break st;
            }
            if deadline.is_some_and(|d| Instant::now() >= d) {
                let _ = child.kill();
                let _ = child.wait();
                let mut res = SolveResult::without_point(SolveStatus::Limit);
                res.meta.insert("killed".into(), "timeout".into());
                return Ok(res);
            }
            std::thread::sleep(Duration::from_millis(5));
        };
        if !status.success() {
            let err = std::fs::read_to_string(&err_path).unwrap_or_default();
            return Err(SolveError::Launch(format!(
                "`{cmd}` exited with {status}: {}",
                err.trim()
            )));
        }
        let sol = std::fs::read_to_string(&sol_path)
            .map_err(|e| SolveError::Backend(format!("no solution file written: {e}")))?;
        let table = parse_solution(model, &sol)?;
        let status = table.status.unwrap_or(SolveStatus::Optimal);
        let mut res = SolveResult::without_point(status);
        if matches!(status, SolveStatus::Optimal | SolveStatus::Limit) {
            res.values = table.values;
            res.objective = table.objective;
        }
        Ok(res)
    }
}
