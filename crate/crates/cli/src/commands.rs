//! Subcommand implementations and artifact writers.

use std::fmt;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use log::info;
use planner_core::dynamics::{
    heading_profile, read_trajectory_csv, write_trajectory_csv, Trajectory,
    DEFAULT_HEADING_SPEED_FLOOR,
};
use planner_core::mission::{derive_payload, signal_from_trajectory, Scenario};
use planner_core::opt::{solve, validate, PlanResult, Residuals, SolverConfig, ValidationReport};
use planner_core::route::{
    build_graph, extract_route, solve_ilp, warm_start, RouteError, RouteGraph, RoutePlan, Visit,
};
use planner_core::stl::{eval_robust, parse_sexpr, to_sexpr};
use serde::Serialize;

use crate::SolverOverrides;

#[derive(Debug)]
pub enum CmdError {
    /// Unreadable or invalid input: exit 2.
    Input(String),
    /// No feasible route: exit 3.
    Infeasible(String),
    /// Anything else: exit 1.
    Internal(String),
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Input(msg) | CmdError::Infeasible(msg) | CmdError::Internal(msg) => {
                write!(f, "{msg}")
            }
        }
    }
}

impl CmdError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CmdError::Input(_) => ExitCode::from(2),
            CmdError::Infeasible(_) => ExitCode::from(3),
            CmdError::Internal(_) => ExitCode::from(1),
        }
    }
}

type CmdResult = Result<ExitCode, CmdError>;

fn load_scenario(path: &Path) -> Result<Scenario, CmdError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CmdError::Input(format!("cannot read {}: {e}", path.display())))?;
    Scenario::from_json_str(&text)
        .map_err(|e| CmdError::Input(format!("{}: {e}", path.display())))
}

fn route_error(err: RouteError) -> CmdError {
    match err {
        RouteError::EmptyScenario | RouteError::Infeasible => CmdError::Infeasible(err.to_string()),
        RouteError::MalformedSolution(_) => CmdError::Infeasible(err.to_string()),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CmdError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| CmdError::Internal(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, contents)
        .map_err(|e| CmdError::Internal(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CmdError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CmdError::Internal(format!("serialization failed: {e}")))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

// ---------------------------------------------------------------------------
// route
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct VisitJson {
    kind: &'static str,
    id: String,
    position: [f64; 3],
}

#[derive(Debug, Serialize)]
struct RouteJson {
    objective: f64,
    visits: Vec<VisitJson>,
}

fn route_json(plan: &RoutePlan, graph: &RouteGraph, scenario: &Scenario, objective: f64) -> RouteJson {
    let visits = plan
        .visits
        .iter()
        .zip(plan.waypoints(graph))
        .map(|(visit, position)| match visit {
            Visit::DepotStart => VisitJson { kind: "depot_start", id: "depot".into(), position },
            Visit::Operator(i) => VisitJson {
                kind: "operator",
                id: scenario.operators[*i].id.clone(),
                position,
            },
            Visit::Refill(i) => {
                VisitJson { kind: "refill", id: format!("rs{}", i + 1), position }
            }
            Visit::FinalRefill(i) => {
                VisitJson { kind: "final_refill", id: format!("rs{}", i + 1), position }
            }
        })
        .collect();
    RouteJson { objective, visits }
}

fn solve_route(scenario: &Scenario) -> Result<(RouteGraph, RoutePlan, f64), CmdError> {
    let graph = build_graph(scenario).map_err(route_error)?;
    let solution = solve_ilp(&graph, scenario.capacity).map_err(route_error)?;
    let plan = extract_route(&solution, &graph).map_err(route_error)?;
    Ok((graph, plan, solution.objective))
}

pub fn route(scenario_path: &Path, out: &Path) -> CmdResult {
    let scenario = load_scenario(scenario_path)?;
    let (graph, plan, objective) = solve_route(&scenario)?;
    let json = route_json(&plan, &graph, &scenario, objective);
    write_json(&out.join("route.json"), &json)?;
    info!("route objective {objective:.6} with {} visits", json.visits.len());
    println!("route: {} visits, total distance {:.6} m", json.visits.len(), objective);
    Ok(ExitCode::SUCCESS)
}

// ---------------------------------------------------------------------------
// plan
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct Report {
    seed: u64,
    scenario_file: String,
    energy_weight: f64,
    satisfied: bool,
    pass: bool,
    exact_robustness: f64,
    smooth_robustness: f64,
    energy: f64,
    warm_start_energy: f64,
    iterations: usize,
    route_objective: f64,
    completion_time_s: f64,
    residuals: Residuals,
    clause_robustness: Vec<(String, f64)>,
    operator_holds_s: Vec<f64>,
    station_holds_s: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    mode: &'static str,
    scenario_file: String,
    out_dir: String,
    seed: u64,
    max_outer: Option<usize>,
    penalty_growth: Option<f64>,
    penalty_initial: Option<f64>,
    no_energy_term: bool,
    unix_time_s: u64,
}

fn solver_config(overrides: &SolverOverrides) -> SolverConfig {
    let mut config = SolverConfig::default();
    if let Some(outer) = overrides.max_outer {
        config.max_outer_iterations = outer;
    }
    if let Some(growth) = overrides.penalty_growth {
        config.penalty_growth = growth;
    }
    if let Some(inner) = overrides.max_inner {
        config.max_inner_iterations = inner;
    }
    if let Some(weight) = overrides.penalty_initial {
        config.initial_penalty_weight = weight;
    }
    config
}

struct PlanOutput {
    result: PlanResult,
    validation: ValidationReport,
    trajectory: Trajectory,
    route: RouteJson,
    formula_text: String,
    report: Report,
}

fn run_plan_pipeline(
    scenario: &Scenario,
    scenario_path: &Path,
    seed: u64,
    overrides: &SolverOverrides,
) -> Result<PlanOutput, CmdError> {
    let (graph, plan, objective) = solve_route(scenario)?;
    let warm = warm_start(&plan, scenario);
    if warm.horizon_exceeded {
        info!("warm start exceeds the mission horizon; optimizing the truncated trajectory");
    }
    let config = solver_config(overrides);
    let result =
        solve(scenario, &warm.trajectory, &config).map_err(|e| CmdError::Internal(e.to_string()))?;
    let validation =
        validate(&result.trajectory, scenario).map_err(|e| CmdError::Internal(e.to_string()))?;

    let heading = heading_profile(&result.trajectory, DEFAULT_HEADING_SPEED_FLOOR);
    let trajectory = result
        .trajectory
        .clone()
        .with_heading(heading)
        .expect("heading length matches the grid");

    let mission = planner_core::mission::compile_mission(scenario)
        .map_err(|e| CmdError::Input(e.to_string()))?;
    let formula_text = to_sexpr(mission.formula());

    let completion = validation
        .payload
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] != w[1])
        .map(|(k, _)| k + 1)
        .next_back()
        .unwrap_or(0);
    let report = Report {
        seed,
        scenario_file: scenario_path.display().to_string(),
        energy_weight: scenario.energy_weight,
        satisfied: result.satisfied,
        pass: validation.pass,
        exact_robustness: validation.exact_robustness,
        smooth_robustness: validation.smooth_robustness,
        energy: validation.energy,
        warm_start_energy: result.warm_energy,
        iterations: result.iterations,
        route_objective: objective,
        completion_time_s: scenario.grid.time_at(completion),
        residuals: validation.residuals,
        clause_robustness: validation.clause_robustness.clone(),
        operator_holds_s: validation.operator_holds_s.clone(),
        station_holds_s: validation.station_holds_s.clone(),
    };
    let route = route_json(&plan, &graph, scenario, objective);
    Ok(PlanOutput { result, validation, trajectory, route, formula_text, report })
}

fn write_plan_artifacts(out: &Path, output: &PlanOutput) -> Result<(), CmdError> {
    write_json(&out.join("route.json"), &output.route)?;
    write_json(&out.join("report.json"), &output.report)?;
    write_file(&out.join("formula.sexp"), output.formula_text.as_bytes())?;

    let mut csv = Vec::new();
    write_trajectory_csv(&mut csv, &output.trajectory, &output.validation.payload)
        .map_err(|e| CmdError::Internal(format!("trajectory serialization failed: {e}")))?;
    write_file(&out.join("trajectory.csv"), &csv)?;

    let mut log = String::from("iter,penalty_weight,J,rho_exact,rho_smooth,energy,max_residual\n");
    for row in &output.result.log {
        log.push_str(&format!(
            "{},{:.9},{:.9},{:.9},{:.9},{:.9},{:.9}\n",
            row.iter,
            row.penalty_weight,
            row.objective,
            row.rho_exact,
            row.rho_smooth,
            row.energy,
            row.max_residual
        ));
    }
    write_file(&out.join("solver_log.csv"), log.as_bytes())?;
    Ok(())
}

fn write_manifest(
    out: &Path,
    mode: &'static str,
    scenario_path: &Path,
    seed: u64,
    overrides: &SolverOverrides,
    no_energy_term: bool,
) -> Result<(), CmdError> {
    let manifest = RunManifest {
        mode,
        scenario_file: scenario_path.display().to_string(),
        out_dir: out.display().to_string(),
        seed,
        max_outer: overrides.max_outer,
        penalty_growth: overrides.penalty_growth,
        penalty_initial: overrides.penalty_initial,
        no_energy_term,
        unix_time_s: SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default().as_secs(),
    };
    write_json(&out.join("run_manifest.json"), &manifest)
}

pub fn plan(
    scenario_path: &Path,
    out: &Path,
    seed: u64,
    no_energy_term: bool,
    overrides: &SolverOverrides,
) -> CmdResult {
    let mut scenario = load_scenario(scenario_path)?;
    if no_energy_term {
        scenario.energy_weight = 0.0;
    }
    let output = run_plan_pipeline(&scenario, scenario_path, seed, overrides)?;
    write_plan_artifacts(out, &output)?;
    write_manifest(out, "plan", scenario_path, seed, overrides, no_energy_term)?;

    println!(
        "plan: {} (exact robustness {:.6}, energy {:.6}, warm-start energy {:.6})",
        if output.result.satisfied { "satisfied" } else { "NOT satisfied" },
        output.validation.exact_robustness,
        output.validation.energy,
        output.result.warm_energy,
    );
    if output.result.satisfied {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(4))
    }
}

// ---------------------------------------------------------------------------
// check
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct CheckReport {
    pass: bool,
    exact_robustness: f64,
    smooth_robustness: f64,
    residuals: Residuals,
    clause_robustness: Vec<(String, f64)>,
    operator_holds_s: Vec<f64>,
    station_holds_s: Vec<f64>,
}

pub fn check(trajectory_path: &Path, scenario_path: &Path, formula: Option<&Path>) -> CmdResult {
    let scenario = load_scenario(scenario_path)?;
    let file = fs::File::open(trajectory_path)
        .map_err(|e| CmdError::Input(format!("cannot read {}: {e}", trajectory_path.display())))?;
    let (trajectory, _payload) = read_trajectory_csv(file)
        .map_err(|e| CmdError::Input(format!("{}: {e}", trajectory_path.display())))?;
    if trajectory.grid() != &scenario.grid {
        return Err(CmdError::Input(format!(
            "trajectory grid ({} samples at {} s) does not match the scenario grid ({} samples at {} s)",
            trajectory.grid().sample_count(),
            trajectory.grid().sampling_period(),
            scenario.grid.sample_count(),
            scenario.grid.sampling_period(),
        )));
    }

    let report = match formula {
        None => {
            let validation =
                validate(&trajectory, &scenario).map_err(|e| CmdError::Internal(e.to_string()))?;
            CheckReport {
                pass: validation.pass,
                exact_robustness: validation.exact_robustness,
                smooth_robustness: validation.smooth_robustness,
                residuals: validation.residuals,
                clause_robustness: validation.clause_robustness,
                operator_holds_s: validation.operator_holds_s,
                station_holds_s: validation.station_holds_s,
            }
        }
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CmdError::Input(format!("cannot read {}: {e}", path.display())))?;
            let formula = parse_sexpr(&text)
                .map_err(|e| CmdError::Input(format!("{}: {e}", path.display())))?;
            // The payload channel is recomputed from the trajectory, so the
            // formula may reference `c` as well as positions/velocities.
            let payload = derive_payload(&trajectory, &scenario);
            let signal = signal_from_trajectory(&trajectory, &payload);
            let exact = eval_robust(&formula, &signal, 0)
                .map_err(|e| CmdError::Input(format!("formula evaluation: {e}")))?;
            let smooth = planner_core::stl::eval_agm(&formula, &signal, 0)
                .map_err(|e| CmdError::Input(format!("formula evaluation: {e}")))?;
            let validation =
                validate(&trajectory, &scenario).map_err(|e| CmdError::Internal(e.to_string()))?;
            CheckReport {
                pass: exact > 0.0 && validation.residuals.max_any() <= 1e-6,
                exact_robustness: exact,
                smooth_robustness: smooth,
                residuals: validation.residuals,
                clause_robustness: Vec::new(),
                operator_holds_s: validation.operator_holds_s,
                station_holds_s: validation.station_holds_s,
            }
        }
    };

    let text = serde_json::to_string_pretty(&report)
        .map_err(|e| CmdError::Internal(format!("serialization failed: {e}")))?;
    println!("{text}");
    if report.pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(4))
    }
}

// ---------------------------------------------------------------------------
// ablation
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct AblationReport {
    seed: u64,
    scenario_file: String,
    energy_weight: f64,
    energy_with_term: f64,
    energy_without_term: f64,
    /// `(E_without - E_with) / E_without`.
    reduction_fraction: f64,
    with_satisfied: bool,
    without_satisfied: bool,
    /// Peak per-step energy of the no-term run; both profiles below are
    /// divided by it.
    normalization_peak: f64,
    profile_with: Vec<f64>,
    profile_without: Vec<f64>,
}

pub fn ablation(scenario_path: &Path, out: &Path, seed: u64, overrides: &SolverOverrides) -> CmdResult {
    let scenario = load_scenario(scenario_path)?;
    let mut without_term = scenario.clone();
    without_term.energy_weight = 0.0;

    let with_run = run_plan_pipeline(&scenario, scenario_path, seed, overrides)?;
    write_plan_artifacts(&out.join("with_energy_term"), &with_run)?;
    let without_run = run_plan_pipeline(&without_term, scenario_path, seed, overrides)?;
    write_plan_artifacts(&out.join("no_energy_term"), &without_run)?;

    let profile_of = |output: &PlanOutput| planner_core::dynamics::energy(&output.result.trajectory);
    let with_energy = profile_of(&with_run);
    let without_energy = profile_of(&without_run);
    let peak = without_energy.per_step.iter().fold(0.0f64, |m, &x| m.max(x));
    let normalize = |profile: &[f64]| -> Vec<f64> {
        if peak > 0.0 {
            profile.iter().map(|&x| x / peak).collect()
        } else {
            profile.to_vec()
        }
    };
    let reduction = if without_energy.total > 0.0 {
        (without_energy.total - with_energy.total) / without_energy.total
    } else {
        0.0
    };
    let report = AblationReport {
        seed,
        scenario_file: scenario_path.display().to_string(),
        energy_weight: scenario.energy_weight,
        energy_with_term: with_energy.total,
        energy_without_term: without_energy.total,
        reduction_fraction: reduction,
        with_satisfied: with_run.validation.pass,
        without_satisfied: without_run.validation.pass,
        normalization_peak: peak,
        profile_with: normalize(&with_energy.per_step),
        profile_without: normalize(&without_energy.per_step),
    };
    write_json(&out.join("ablation.json"), &report)?;
    write_manifest(out, "ablation", scenario_path, seed, overrides, false)?;

    println!(
        "ablation: energy {:.6} with term vs {:.6} without ({:.2}% reduction)",
        report.energy_with_term,
        report.energy_without_term,
        report.reduction_fraction * 100.0
    );
    if with_run.result.satisfied && without_run.result.satisfied {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(4))
    }
}
