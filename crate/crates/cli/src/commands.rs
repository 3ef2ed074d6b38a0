use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use ecplan_core::io::{
    self, FileHash, RunManifest, ScenarioEntry, ScenarioManifest, COMMUNITY_FILE, DEVICE_CATALOGUE_FILE,
    RC_CATALOGUE_FILE, SCENARIO_MANIFEST_FILE,
};
use ecplan_core::orchestrator::{self, PlanResult};
use ecplan_core::problem::{build_problem, BuildOptions};
use ecplan_core::scenario::{self, BootstrapSpec, Factor, KMedoidsOptions};
use ecplan_core::types::{CommunityConfig, Scenario};
use ecplan_milp::{
    parse_lp, parse_mps, solve, write_lp, write_mps, write_solution, Backend, CommandBackend, FileFormat,
    HighsBackend, SolveError, SolveOptions,
};

use crate::{Command, ModelFormat, PlanCommand, ScenarioCommand, SolveArgs};

/// 2 for solver failures, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ecplan_core::Error>() {
            return match e {
                ecplan_core::Error::Solve(_) | ecplan_core::Error::NoSolution(_) => 2,
                _ => 1,
            };
        }
        if cause.downcast_ref::<SolveError>().is_some() {
            return 2;
        }
    }
    1
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Validate { config } => validate(&config),
        Command::Fixture { out, buildings, seed } => {
            io::generate_fixture(&out, buildings, seed)?;
            println!("wrote fixture with {buildings} buildings to {}", out.display());
            Ok(())
        }
        Command::Scenarios(c) => scenarios(c),
        Command::Plan(c) => plan(c),
        Command::Report { plan, out } => {
            let p = io::read_plan(&plan)?;
            for f in io::emit_reports(&p, &out)? {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::SolveFile { model, solution, format, time_limit, mip_gap } => {
            solve_file(&model, &solution, format, time_limit, mip_gap)
        }
    }
}

/// Data directory of a `--config` argument, which may name the directory
/// or its community file.
fn data_dir(config: &Path) -> Result<PathBuf> {
    if config.is_dir() {
        return Ok(config.to_path_buf());
    }
    if config.file_name().is_some_and(|n| n == COMMUNITY_FILE) {
        return Ok(config.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf));
    }
    bail!("{}: expected a data directory or its {COMMUNITY_FILE}", config.display())
}

fn config_inputs(dir: &Path) -> Result<Vec<FileHash>> {
    let mut out = Vec::new();
    for f in [COMMUNITY_FILE, RC_CATALOGUE_FILE, DEVICE_CATALOGUE_FILE] {
        let p = dir.join(f);
        if p.exists() {
            out.push(FileHash::of(&p)?);
        }
    }
    Ok(out)
}

fn scenario_inputs(dir: &Path, m: &ScenarioManifest) -> Result<Vec<FileHash>> {
    let mut out = vec![FileHash::of(&dir.join(SCENARIO_MANIFEST_FILE))?];
    for e in &m.scenarios {
        if let Some(f) = &e.file {
            out.push(FileHash::of(&dir.join(f))?);
        }
    }
    Ok(out)
}

fn now() -> String {
    chrono::Utc::now().format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string()
}

/// Collects what a run needs for its manifest and writes it at the end.
struct Recorder {
    started: String,
    clock: Instant,
    command: Vec<String>,
    inputs: Vec<FileHash>,
    solver: BTreeMap<String, String>,
    seeds: BTreeMap<String, u64>,
}

impl Recorder {
    fn start() -> Self {
        Self {
            started: now(),
            clock: Instant::now(),
            command: std::env::args().collect(),
            inputs: Vec::new(),
            solver: BTreeMap::new(),
            seeds: BTreeMap::new(),
        }
    }

    fn finish(self, out: &Path) -> Result<PathBuf> {
        let m = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command,
            inputs: self.inputs,
            solver: self.solver,
            seeds: self.seeds,
            started: self.started,
            finished: now(),
            wall_s: self.clock.elapsed().as_secs_f64(),
        };
        Ok(io::write_run_manifest(out, &m)?)
    }
}

fn validate(config: &Path) -> Result<()> {
    let dir = data_dir(config)?;
    let ing = io::ingest_community(&dir)?;
    for w in &ing.warnings {
        println!("warning: {w}");
    }
    println!(
        "ok: {} buildings, {} community devices, {} days of history",
        ing.config.buildings.len(),
        ing.config.community_devices.len(),
        ing.history.days()
    );
    Ok(())
}

fn scenarios(cmd: ScenarioCommand) -> Result<()> {
    match cmd {
        ScenarioCommand::Generate { config, out, years, seed, window_weeks, block_hours, no_weekday_partition } => {
            let mut rec = Recorder::start();
            let dir = data_dir(&config)?;
            let ing = io::ingest_community(&dir)?;
            let spec = BootstrapSpec {
                block_hours,
                window_weeks,
                n_years: years,
                rng_seed: seed,
                weekday_partition: !no_weekday_partition,
            };
            let drawn = scenario::bootstrap_years(&ing.history, &spec)?;
            let weights = scenario::count_weights(&vec![1; drawn.len()]);
            let manifest = ScenarioManifest {
                rng_seed: seed,
                bootstrap: Some(spec),
                reduced_to: None,
                history_sha256: Some(io::history_digest(&ing.history)),
                buildings: ing.history.buildings(),
                start: ing.history.start,
                step_hours: ing.history.step_hours,
                scenarios: drawn
                    .iter()
                    .zip(weights)
                    .map(|(y, p)| ScenarioEntry {
                        id: y.id(),
                        probability: p,
                        count: None,
                        file: None,
                        source_days: Some(y.days.clone()),
                    })
                    .collect(),
            };
            io::write_scenario_manifest(&out, &manifest)?;
            rec.inputs = config_inputs(&dir)?;
            rec.seeds.insert("bootstrap".into(), seed);
            rec.finish(&out)?;
            println!("wrote {years} synthetic years to {}", out.display());
            Ok(())
        }
        ScenarioCommand::Reduce { config, from, out, k, seed, restarts } => {
            let mut rec = Recorder::start();
            let dir = data_dir(&config)?;
            let ing = io::ingest_community(&dir)?;
            let src = io::read_scenario_manifest(&from)?;
            let digest = io::history_digest(&ing.history);
            if src.history_sha256.as_deref().is_some_and(|h| h != digest) {
                bail!("{}: scenarios were drawn from a different history", from.display());
            }
            let years = src.years()?;
            let reduced = scenario::reduce_scenarios(&ing.history, &years, k, &KMedoidsOptions { seed, restarts })?;
            let mut profiles = Vec::with_capacity(k);
            let mut entries = Vec::with_capacity(k);
            for ((y, &p), &count) in reduced.years.iter().zip(&reduced.probabilities).zip(&reduced.counts) {
                let id = src.scenarios[y.index].id.clone();
                profiles.push(ing.history.materialize(&id, p, &y.days)?);
                entries.push(ScenarioEntry {
                    id,
                    probability: p,
                    count: Some(count),
                    file: None,
                    source_days: Some(y.days.clone()),
                });
            }
            let manifest = ScenarioManifest {
                reduced_to: Some(k),
                history_sha256: Some(digest),
                scenarios: entries,
                ..src.clone()
            };
            io::write_scenario_dir(&out, &profiles, manifest)?;
            rec.inputs = config_inputs(&dir)?;
            rec.inputs.push(FileHash::of(&from.join(SCENARIO_MANIFEST_FILE))?);
            rec.seeds.insert("bootstrap".into(), src.rng_seed);
            rec.seeds.insert("kmedoids".into(), seed);
            rec.finish(&out)?;
            for e in &profiles {
                println!("{} {}", e.id, e.probability);
            }
            Ok(())
        }
        ScenarioCommand::Nominal { scenarios, factors } => {
            let (set, _) = io::read_scenario_dir(&scenarios)?;
            for f in parse_factors(&factors)? {
                let i = scenario::nominal_scenario(&set, f)?;
                println!("{} {}", f.name(), set[i].id);
            }
            Ok(())
        }
    }
}

fn parse_factors(list: &str) -> Result<Vec<Factor>> {
    let mut out = Vec::new();
    for tok in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let f: Factor = tok.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        bail!("no factors given");
    }
    Ok(out)
}

fn file_format(f: ModelFormat) -> FileFormat {
    match f {
        ModelFormat::Lp => FileFormat::Lp,
        ModelFormat::Mps => FileFormat::Mps,
    }
}

/// Inputs shared by the plan verbs.
struct Setup {
    cfg: CommunityConfig,
    scenarios: Vec<Scenario>,
    backend: Box<dyn Backend>,
    options: SolveOptions,
    rec: Recorder,
}

fn setup(args: &SolveArgs) -> Result<Setup> {
    let mut rec = Recorder::start();
    let dir = data_dir(&args.config)?;
    let cfg = io::read_config(&dir)?;
    let (scenarios, manifest) = io::read_scenario_dir(&args.scenarios)?;
    let options = SolveOptions {
        time_limit_s: args.time_limit,
        mip_gap: args.mip_gap,
        seed: args.solver_seed,
    };
    let backend: Box<dyn Backend> = match &args.solver {
        Some(t) => Box::new(CommandBackend::new(t.clone()).with_format(file_format(args.solver_format))),
        None => Box::new(HighsBackend { threads: Some(args.threads) }),
    };
    rec.inputs = config_inputs(&dir)?;
    rec.inputs.extend(scenario_inputs(&args.scenarios, &manifest)?);
    rec.seeds.insert("bootstrap".into(), manifest.rng_seed);
    rec.seeds.insert("solver".into(), args.solver_seed);
    rec.solver = BTreeMap::from([
        ("backend".to_string(), backend.name().to_string()),
        ("mip_gap".to_string(), args.mip_gap.to_string()),
        ("time_limit_s".to_string(), args.time_limit.map_or("none".into(), |t| t.to_string())),
        ("threads".to_string(), args.threads.to_string()),
    ]);
    if let Some(t) = &args.solver {
        rec.solver.insert("command".into(), t.clone());
    }
    Ok(Setup { cfg, scenarios, backend, options, rec })
}

fn summarize(p: &PlanResult) {
    let b = &p.breakdown;
    println!(
        "O_tot {:.3} EUR (investment {:.3}, operation {:.3}, carbon {:.3}, slack {:.3})",
        b.tot, b.inv, b.opr, b.co2, b.slk
    );
    for d in p.designs.iter().filter(|d| d.chi == 1) {
        println!("  {} {} {:.3}", d.entity, d.device, d.value);
    }
}

fn plan(cmd: PlanCommand) -> Result<()> {
    match cmd {
        PlanCommand::Centralized { solve, export_lp, export_mps } => {
            let s = setup(&solve)?;
            if export_lp.is_some() || export_mps.is_some() {
                let problem = build_problem(&s.cfg, &s.scenarios, &BuildOptions::default())?;
                if let Some(p) = export_lp {
                    fs::write(&p, write_lp(&problem.model)).with_context(|| p.display().to_string())?;
                }
                if let Some(p) = export_mps {
                    fs::write(&p, write_mps(&problem.model)).with_context(|| p.display().to_string())?;
                }
            }
            let result = orchestrator::plan_centralized(&s.cfg, &s.scenarios, s.backend.as_ref(), &s.options)?;
            finish_plan(&result, &solve.out, s.rec)
        }
        PlanCommand::Distributed { solve, epsilon, max_iters } => {
            let mut s = setup(&solve)?;
            s.rec.solver.insert("epsilon".into(), epsilon.to_string());
            s.rec.solver.insert("max_iters".into(), max_iters.to_string());
            let result = orchestrator::plan_distributed(
                &s.cfg,
                &s.scenarios,
                epsilon,
                max_iters,
                s.backend.as_ref(),
                &s.options,
            )?;
            println!(
                "{} sweeps, {}",
                result.meta.iterations,
                if result.meta.converged { "converged" } else { "not converged" }
            );
            finish_plan(&result, &solve.out, s.rec)
        }
        PlanCommand::Sensitivity { solve, factors, reference } => {
            let mut s = setup(&solve)?;
            let factors = parse_factors(&factors)?;
            let reference = match &reference {
                Some(p) => {
                    s.rec.inputs.push(FileHash::of(p)?);
                    Some(io::read_plan(p)?)
                }
                None => None,
            };
            let report = orchestrator::run_sensitivity(
                &s.cfg,
                &s.scenarios,
                &factors,
                reference.as_ref(),
                s.backend.as_ref(),
                &s.options,
            )?;
            let failed = report.cases.iter().filter(|c| c.objective.is_none()).count();
            println!("{} cases solved, {failed} without solution", report.cases.len() - failed);
            for f in io::emit_sensitivity(&report, &solve.out)? {
                println!("{}", f.display());
            }
            s.rec.finish(&solve.out)?;
            Ok(())
        }
    }
}

fn finish_plan(result: &PlanResult, out: &Path, rec: Recorder) -> Result<()> {
    summarize(result);
    for f in io::emit_reports(result, out)? {
        println!("{}", f.display());
    }
    rec.finish(out)?;
    Ok(())
}

fn solve_file(model: &Path, solution: &Path, format: ModelFormat, time_limit: Option<f64>, mip_gap: f64) -> Result<()> {
    let text = fs::read_to_string(model).with_context(|| model.display().to_string())?;
    let m = match format {
        ModelFormat::Lp => parse_lp(&text),
        ModelFormat::Mps => parse_mps(&text),
    }
    .with_context(|| model.display().to_string())?;
    let options = SolveOptions { time_limit_s: time_limit.filter(|t| t.is_finite()), mip_gap, ..SolveOptions::default() };
    let res = solve(&m, &HighsBackend { threads: Some(1) }, &options)?;
    fs::write(solution, write_solution(&m, res.status, res.objective, &res.values))
        .with_context(|| solution.display().to_string())?;
    Ok(())
}
