//! Mission planner command line.
//!
//! Subcommands: `route` (visit order only), `plan` (full pipeline to
//! trajectory artifacts), `check` (validate a trajectory file), `ablation`
//! (plan with and without the energy term and compare).
//!
//! Exit codes: 0 success, 2 input error, 3 infeasible route,
//! 4 plan/check did not satisfy the mission.

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "planner", version, about = "Energy-aware handover mission planner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
struct SolverOverrides {
    /// Maximum number of penalty rounds.
    #[arg(long, value_name = "K")]
    max_outer: Option<usize>,
    /// Penalty weight growth factor per round (> 1).
    #[arg(long, value_name = "G")]
    penalty_growth: Option<f64>,
    /// Maximum ascent steps per penalty round.
    #[arg(long, value_name = "K")]
    max_inner: Option<usize>,
    /// Initial penalty weight.
    #[arg(long, value_name = "W")]
    penalty_initial: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the visit-order program and write route.json.
    Route {
        scenario: PathBuf,
        /// Output directory for artifacts.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Full pipeline: route, warm start, trajectory optimization, artifacts.
    Plan {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Recorded in all artifacts; the pipeline itself is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Drop the energy term (sets the energy weight to zero).
        #[arg(long)]
        no_energy_term: bool,
        #[command(flatten)]
        solver: SolverOverrides,
    },
    /// Validate a trajectory CSV against a scenario.
    Check {
        trajectory: PathBuf,
        scenario: PathBuf,
        /// Check against a formula file (S-expression) instead of the
        /// compiled mission formula.
        #[arg(long)]
        formula: Option<PathBuf>,
    },
    /// Run the plan with and without the energy term and compare energies.
    Ablation {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        solver: SolverOverrides,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("PLANNER_LOG_LEVEL", "info"),
    )
    .format_timestamp(None)
    .init();

    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Route { scenario, out } => commands::route(&scenario, &out),
        Command::Plan { scenario, out, seed, no_energy_term, solver } => {
            commands::plan(&scenario, &out, seed, no_energy_term, &solver)
        }
        Command::Check { trajectory, scenario, formula } => {
            commands::check(&trajectory, &scenario, formula.as_deref())
        }
        Command::Ablation { scenario, out, seed, solver } => {
            commands::ablation(&scenario, &out, seed, &solver)
        }
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}
