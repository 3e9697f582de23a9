//! Objective arithmetic, gradient checks, and end-to-end solves.

use approx::assert_relative_eq;
use planner_core::dynamics::Trajectory;
use planner_core::mission::{compile_mission, Scenario};
use planner_core::opt::{solve, DecisionVector, ObjectiveContext, SolverConfig};
use planner_core::route::{build_graph, extract_route, solve_ilp, warm_start};
use planner_core::stl::{Formula, Predicate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Three-sample scenario (N = 2 steps) for objective arithmetic.
fn tiny_scenario(energy_weight: f64) -> Scenario {
    let json = serde_json::json!({
        "workspace": {"lower": [-5.0, -5.0, 0.0], "upper": [5.0, 5.0, 4.0]},
        "operators": [
            {"position": [2.0, 0.0, 1.0], "heading_rad": 0.0, "preferences": ["front"]}
        ],
        "refill_stations": [{"center": [-2.0, 0.0, 1.0]}],
        "depot": [0.0, 0.0, 1.0],
        "capacity": 1,
        "times": {"T_N": 1.0, "T_han": 0.4, "T_rs": 0.4, "T_s": 0.5},
        "limits": {"v_max": 1.1, "a_max": 1.1},
        "energy_weight": energy_weight
    });
    Scenario::from_json_str(&json.to_string()).unwrap()
}

/// A margin-0.5 predicate satisfied by hovering at the depot.
fn flat_margin_formula() -> Formula<f64> {
    Formula::pred(Predicate::affine("p1", 1.0, 0.5))
}

fn hover_decision(scenario: &Scenario) -> DecisionVector {
    DecisionVector::from_trajectory(&Trajectory::hover(scenario.grid, scenario.depot))
}

#[test]
fn objective_value_is_the_margin_without_penalties() {
    let scenario = tiny_scenario(0.1);
    let mut ctx = ObjectiveContext::new(&scenario, &flat_margin_formula()).unwrap();
    let dec = hover_decision(&scenario);
    let value = ctx.value(&dec, 10.0).unwrap();
    assert_relative_eq!(value, 0.5, epsilon = 1e-12);
}

#[test]
fn unit_slacks_cost_exactly_the_energy_term() {
    let scenario = tiny_scenario(0.1);
    let mut ctx = ObjectiveContext::new(&scenario, &flat_margin_formula()).unwrap();
    let mut dec = hover_decision(&scenario);
    for axis in 0..3 {
        for e in dec.slacks[axis].iter_mut() {
            *e = 1.0;
        }
    }
    // q=0.1, N=2 steps, 3 axes: energy term 0.1 * 6 = 0.6.
    let value = ctx.value(&dec, 10.0).unwrap();
    assert_relative_eq!(value, 0.5 - 0.6, epsilon = 1e-12);
}

fn small_mission_scenario() -> Scenario {
    let json = serde_json::json!({
        "workspace": {"lower": [-6.0, -6.0, 0.0], "upper": [6.0, 6.0, 4.0]},
        "operators": [
            {"position": [3.0, 0.0, 1.0], "heading_rad": std::f64::consts::PI, "preferences": ["left"]}
        ],
        "refill_stations": [{"center": [-1.5, 0.0, 1.0]}],
        "depot": [0.0, 0.0, 1.0],
        "capacity": 1,
        "times": {"T_N": 20.0, "T_han": 3.0, "T_rs": 3.0, "T_s": 0.25},
        "limits": {"v_max": 1.1, "a_max": 1.1},
        "energy_weight": 0.1
    });
    Scenario::from_json_str(&json.to_string()).unwrap()
}

#[test]
fn objective_gradient_matches_finite_differences() {
    let scenario = small_mission_scenario();
    let mission = compile_mission(&scenario).unwrap();
    let mut ctx = ObjectiveContext::new(&scenario, mission.formula()).unwrap();

    let graph = build_graph(&scenario).unwrap();
    let plan = extract_route(&solve_ilp(&graph, scenario.capacity).unwrap(), &graph).unwrap();
    let warm = warm_start(&plan, &scenario);
    let base = DecisionVector::from_trajectory(&warm.trajectory);

    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let n = base.step_count();
    let weight = 10.0;
    for _ in 0..4 {
        // Random perturbation of the warm start keeps the iterate generic.
        let mut dec = base.clone();
        for axis in 0..3 {
            for k in 0..n {
                dec.accelerations[axis][k] += rng.gen_range(-0.05..0.05);
                dec.slacks[axis][k] += rng.gen_range(0.0..0.05);
            }
        }
        let (_, gradient) = ctx.value_and_gradient(&dec, weight).unwrap();

        let h = 1e-6;
        for _ in 0..8 {
            let axis = rng.gen_range(0..3);
            let k = rng.gen_range(0..n);
            let on_slack = rng.gen_bool(0.4);
            let mut plus = dec.clone();
            let mut minus = dec.clone();
            let analytic = if on_slack {
                plus.slacks[axis][k] += h;
                minus.slacks[axis][k] -= h;
                gradient.slacks[axis][k]
            } else {
                plus.accelerations[axis][k] += h;
                minus.accelerations[axis][k] -= h;
                gradient.accelerations[axis][k]
            };
            let fd = (ctx.value(&plus, weight).unwrap() - ctx.value(&minus, weight).unwrap())
                / (2.0 * h);
            let scale = fd.abs().max(analytic.abs());
            if scale < 1e-7 {
                continue;
            }
            let rel = (fd - analytic).abs() / scale;
            assert!(
                rel <= 1e-4,
                "objective gradient mismatch at axis {axis} step {k} (slack={on_slack}): {analytic} vs {fd}"
            );
        }
    }
}

#[test]
fn solve_improves_a_trivially_satisfiable_mission() {
    let scenario = small_mission_scenario();
    let graph = build_graph(&scenario).unwrap();
    let plan = extract_route(&solve_ilp(&graph, scenario.capacity).unwrap(), &graph).unwrap();
    let warm = warm_start(&plan, &scenario);
    assert!(!warm.horizon_exceeded);

    let config = SolverConfig { max_outer_iterations: 3, max_inner_iterations: 25, ..Default::default() };
    let result = solve(&scenario, &warm.trajectory, &config).unwrap();
    assert!(result.satisfied, "exact robustness {} not positive", result.exact_robustness);
    assert!(result.exact_robustness > 0.0);
    assert!(result.residuals.max_any() <= 1e-6, "residuals {:?}", result.residuals);
    assert_eq!(result.log.len(), 3);

    // Accepted merits are non-decreasing within each outer round.
    for merits in &result.merit_history {
        for pair in merits.windows(2) {
            assert!(pair[1] >= pair[0], "merit decreased: {} -> {}", pair[0], pair[1]);
        }
    }

    // Best-iterate dominance over the warm start.
    let mission = compile_mission(&scenario).unwrap();
    let mut ctx = ObjectiveContext::new(&scenario, mission.formula()).unwrap();
    let warm_eval = ctx
        .evaluate(&DecisionVector::from_trajectory(&warm.trajectory), config.initial_penalty_weight)
        .unwrap();
    assert!(
        result.exact_robustness >= warm_eval.exact_robustness,
        "solver went below the warm start: {} < {}",
        result.exact_robustness,
        warm_eval.exact_robustness
    );

    // Rollout identity: stored states reproduce from stored accelerations.
    let rebuilt = Trajectory::from_rollout(
        *result.trajectory.grid(),
        std::array::from_fn(|axis| planner_core::dynamics::AxisState::at_rest(scenario.depot[axis])),
        std::array::from_fn(|axis| result.trajectory.accelerations(axis).to_vec()),
    )
    .unwrap();
    for axis in 0..3 {
        for k in 0..scenario.grid.sample_count() {
            assert_relative_eq!(
                rebuilt.positions(axis)[k],
                result.trajectory.positions(axis)[k],
                epsilon = 1e-12
            );
        }
    }

    // Slack tracking at convergence.
    let slacks = result.trajectory.slacks().expect("solver attaches slacks");
    for axis in 0..3 {
        for (a, e) in result.trajectory.accelerations(axis).iter().zip(&slacks[axis]) {
            assert!(e >= &(a * a - 1e-6), "slack {e} below squared acceleration {}", a * a);
        }
    }
}

#[test]
fn solve_reports_unsatisfied_missions_without_erroring() {
    // Horizon too short to reach the operator: stays a valid result with
    // satisfied = false.
    let json = serde_json::json!({
        "workspace": {"lower": [-6.0, -6.0, 0.0], "upper": [6.0, 6.0, 4.0]},
        "operators": [
            {"position": [4.0, 0.0, 1.0], "heading_rad": std::f64::consts::PI, "preferences": ["left"]}
        ],
        "refill_stations": [{"center": [-1.5, 0.0, 1.0]}],
        "depot": [0.0, 0.0, 1.0],
        "capacity": 1,
        "times": {"T_N": 4.0, "T_han": 3.0, "T_rs": 3.0, "T_s": 0.25},
        "limits": {"v_max": 1.1, "a_max": 1.1},
        "energy_weight": 0.1
    });
    let scenario = Scenario::from_json_str(&json.to_string()).unwrap();
    let graph = build_graph(&scenario).unwrap();
    let plan = extract_route(&solve_ilp(&graph, scenario.capacity).unwrap(), &graph).unwrap();
    let warm = warm_start(&plan, &scenario);
    assert!(warm.horizon_exceeded);

    let config = SolverConfig { max_outer_iterations: 2, max_inner_iterations: 10, ..Default::default() };
    let result = solve(&scenario, &warm.trajectory, &config).unwrap();
    assert!(!result.satisfied);
    assert!(result.exact_robustness <= 0.0);
}
