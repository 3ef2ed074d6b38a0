//! `ecplan`: sizing of energy-community devices under uncertainty.
//!
//! Exit codes: 0 success, 1 bad input or usage, 2 solver failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ecplan", version, about = "Two-stage stochastic sizing of energy communities")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a data directory: configuration, catalogues and histories.
    Validate {
        /// Data directory or its community.json.
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a synthetic data directory.
    Fixture {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        buildings: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Scenario generation and reduction.
    #[command(subcommand)]
    Scenarios(ScenarioCommand),
    /// Solve a sizing problem.
    #[command(subcommand)]
    Plan(PlanCommand),
    /// Re-emit the reports of a saved plan.
    Report {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve an LP or MPS file in process and write a solution table.
    #[command(hide = true)]
    SolveFile {
        model: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, value_enum, default_value_t = ModelFormat::Lp)]
        format: ModelFormat,
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long, default_value_t = 1e-6)]
        mip_gap: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelFormat {
    Lp,
    Mps,
}

#[derive(Debug, Subcommand)]
enum ScenarioCommand {
    /// Bootstrap synthetic years from the history (source days only).
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        years: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        window_weeks: u32,
        #[arg(long, default_value_t = 24)]
        block_hours: u32,
        /// Draw weekdays and weekend days from one pool.
        #[arg(long)]
        no_weekday_partition: bool,
    },
    /// Cluster bootstrapped years and write the medoids with their weights.
    Reduce {
        #[arg(long)]
        config: PathBuf,
        /// Directory written by `scenarios generate`.
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(short, long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
    },
    /// Print the nominal scenario of each factor.
    Nominal {
        #[arg(long)]
        scenarios: PathBuf,
        /// Comma-separated subset of occ, eco, clim.
        #[arg(long, default_value = "occ,eco,clim")]
        factors: String,
    },
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Data directory or its community.json.
    #[arg(long)]
    config: PathBuf,
    /// Directory with scenario profiles and manifest.
    #[arg(long)]
    scenarios: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Relative MIP gap.
    #[arg(long, default_value_t = 1e-6)]
    mip_gap: f64,
    /// Per-solve time limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Solver threads for the in-process backend.
    #[arg(long, default_value_t = 1)]
    threads: u32,
    /// Solver random seed.
    #[arg(long, default_value_t = 0)]
    solver_seed: u64,
    /// External solver command template with {model} and {solution}
    /// placeholders; the in-process solver is used when unset.
    #[arg(long, env = "ECPLAN_SOLVER")]
    solver: Option<String>,
    /// Model file format handed to an external solver.
    #[arg(long, value_enum, default_value_t = ModelFormat::Lp)]
    solver_format: ModelFormat,
}

#[derive(Debug, Subcommand)]
enum PlanCommand {
    /// One model over all buildings and scenarios.
    Centralized {
        #[command(flatten)]
        solve: SolveArgs,
        /// Also write the model in LP format.
        #[arg(long)]
        export_lp: Option<PathBuf>,
        /// Also write the model in MPS format.
        #[arg(long)]
        export_mps: Option<PathBuf>,
    },
    /// Sequential building-by-building scheme.
    Distributed {
        #[command(flatten)]
        solve: SolveArgs,
        /// Stop when the total cost changes by at most this much (EUR).
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 50)]
        max_iters: usize,
    },
    /// One-at-a-time study of the uncertainty factors.
    Sensitivity {
        #[command(flatten)]
        solve: SolveArgs,
        #[arg(long, default_value = "occ,eco,clim")]
        factors: String,
        /// Stochastic plan to use as reference instead of solving it again.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
