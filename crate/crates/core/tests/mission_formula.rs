//! Mission compilation checked with the exact evaluator on constructed
//! trajectories.

use planner_core::dynamics::{rest_to_rest, AxisState, MotionSegment, Trajectory};
use planner_core::mission::{
    compile_mission, derive_payload, signal_from_trajectory, Scenario,
};
use planner_core::stl::{eval_robust, to_sexpr};

fn mockup_json() -> String {
    std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/mockup.json"))
        .expect("mock-up scenario fixture")
}

fn mockup() -> Scenario {
    Scenario::from_json_str(&mockup_json()).unwrap()
}

/// Trajectory visiting `stops` in order with the given hold steps at each,
/// padded with a terminal hold.
fn tour(scenario: &Scenario, stops: &[([f64; 3], usize)]) -> Trajectory {
    let dt = scenario.grid.sampling_period();
    let mut at = scenario.depot;
    let mut accels: [Vec<f64>; 3] = Default::default();
    for &(target, hold_steps) in stops {
        let travel = rest_to_rest(at, target, &scenario.limits, dt);
        let hold = MotionSegment::hold(target, hold_steps, dt);
        for axis in 0..3 {
            accels[axis].extend_from_slice(travel.accelerations(axis));
            accels[axis].extend_from_slice(hold.accelerations(axis));
        }
        at = target;
    }
    let steps = scenario.grid.step_count();
    assert!(accels[0].len() <= steps, "tour does not fit the horizon");
    for axis in accels.iter_mut() {
        axis.resize(steps, 0.0);
    }
    let initial = std::array::from_fn(|axis| AxisState::at_rest(scenario.depot[axis]));
    Trajectory::from_rollout(scenario.grid, initial, accels).unwrap()
}

fn exact_mission_robustness(scenario: &Scenario, trajectory: &Trajectory) -> f64 {
    let mission = compile_mission(scenario).unwrap();
    let payload = derive_payload(trajectory, scenario);
    let signal = signal_from_trajectory(trajectory, &payload);
    eval_robust(mission.formula(), &signal, 0).unwrap()
}

fn clause_value(scenario: &Scenario, trajectory: &Trajectory, name: &str) -> f64 {
    let mission = compile_mission(scenario).unwrap();
    let payload = derive_payload(trajectory, scenario);
    let signal = signal_from_trajectory(trajectory, &payload);
    let (_, clause) = mission
        .clauses()
        .iter()
        .find(|(n, _)| n == name)
        .unwrap_or_else(|| panic!("clause {name} missing"));
    eval_robust(clause, &signal, 0).unwrap()
}

fn satisfying_tour(scenario: &Scenario) -> Trajectory {
    let hold = scenario.grid.duration_to_samples(scenario.handover_time);
    tour(
        scenario,
        &[
            (scenario.operators[0].handover_box.center(), hold),
            (scenario.operators[1].handover_box.center(), hold),
            (scenario.refill_stations[0].center(), hold),
        ],
    )
}

#[test]
fn hover_inside_workspace_fails_only_on_mission_clauses() {
    let scenario = mockup();
    let trajectory = Trajectory::hover(scenario.grid, scenario.depot);
    let rho = exact_mission_robustness(&scenario, &trajectory);
    assert!(rho < 0.0, "a hover cannot complete handovers, got {rho}");
    assert!(clause_value(&scenario, &trajectory, "workspace") > 0.0);
    assert!(clause_value(&scenario, &trajectory, "obstacles") > 0.0);
    assert!(clause_value(&scenario, &trajectory, "behind") > 0.0);
    assert!(clause_value(&scenario, &trajectory, "handover_ho1") < 0.0);
}

#[test]
fn obstacle_clause_omitted_when_no_obstacles() {
    let mut json: serde_json::Value = serde_json::from_str(&mockup_json()).unwrap();
    json["obstacles"] = serde_json::json!([]);
    let scenario = Scenario::from_json_str(&json.to_string()).unwrap();
    let mission = compile_mission(&scenario).unwrap();
    assert!(mission.clauses().iter().all(|(name, _)| name != "obstacles"));
}

#[test]
fn constructed_mission_tour_is_satisfying() {
    let scenario = mockup();
    let trajectory = satisfying_tour(&scenario);
    let rho = exact_mission_robustness(&scenario, &trajectory);
    assert!(rho > 0.0, "hand-built tour should satisfy the mission, got {rho}");

    // Payload: two handovers deplete both tools, the terminal stay refills.
    let payload = derive_payload(&trajectory, &scenario);
    assert_eq!(payload[0], 2);
    assert!(payload.contains(&0));
    assert_eq!(*payload.last().unwrap(), 2);
}

#[test]
fn tour_through_an_obstacle_is_violating() {
    let scenario = mockup();
    let hold = scenario.grid.duration_to_samples(scenario.handover_time);
    let obstacle_center = scenario.obstacles[0].center();
    let trajectory = tour(
        &scenario,
        &[
            (scenario.operators[0].handover_box.center(), hold),
            (obstacle_center, 0),
            (scenario.operators[1].handover_box.center(), hold),
            (scenario.refill_stations[0].center(), hold),
        ],
    );
    let rho = exact_mission_robustness(&scenario, &trajectory);
    assert!(rho < 0.0);
    assert!(clause_value(&scenario, &trajectory, "obstacles") < 0.0);
}

#[test]
fn leaving_the_workspace_fails_the_workspace_clause() {
    let scenario = mockup();
    let hold = scenario.grid.duration_to_samples(scenario.handover_time);
    // Dip outside the workspace ceiling on the way.
    let outside = [0.0, 0.0, 3.4];
    let trajectory = tour(
        &scenario,
        &[
            (outside, 0),
            (scenario.operators[0].handover_box.center(), hold),
            (scenario.operators[1].handover_box.center(), hold),
            (scenario.refill_stations[0].center(), hold),
        ],
    );
    assert!(clause_value(&scenario, &trajectory, "workspace") < 0.0);
    assert!(exact_mission_robustness(&scenario, &trajectory) < 0.0);
}

#[test]
fn mid_route_refill_at_the_only_station_breaks_the_home_clause() {
    // Entering and later leaving the single station box violates the
    // once-home-stay-home clause; ending there instead satisfies it.
    let scenario = mockup();
    let hold = scenario.grid.duration_to_samples(scenario.handover_time);
    let station = scenario.refill_stations[0].center();
    let trajectory = tour(
        &scenario,
        &[
            (scenario.operators[0].handover_box.center(), hold),
            (station, hold),
            (scenario.operators[1].handover_box.center(), hold),
            (station, hold),
        ],
    );
    assert!(clause_value(&scenario, &trajectory, "home") < 0.0);

    let terminal = satisfying_tour(&scenario);
    assert!(clause_value(&scenario, &terminal, "home") > 0.0);
}

#[test]
fn refill_at_second_station_keeps_home_clause_satisfiable() {
    let mut json: serde_json::Value = serde_json::from_str(&mockup_json()).unwrap();
    json["refill_stations"] = serde_json::json!([
        { "center": [0.2, -0.6, 1.0], "size": [0.4, 0.4, 0.4] },
        { "center": [1.5, 2.0, 1.0], "size": [0.4, 0.4, 0.4] }
    ]);
    json["capacity"] = serde_json::json!(1);
    json["times"]["T_N"] = serde_json::json!(30.0);
    let scenario = Scenario::from_json_str(&json.to_string()).unwrap();
    let hold = scenario.grid.duration_to_samples(scenario.handover_time);
    // Refill mid-route at station 1, finish at station 0.
    let trajectory = tour(
        &scenario,
        &[
            (scenario.operators[0].handover_box.center(), hold),
            (scenario.refill_stations[1].center(), hold),
            (scenario.operators[1].handover_box.center(), hold),
            (scenario.refill_stations[0].center(), hold),
        ],
    );
    assert!(clause_value(&scenario, &trajectory, "home") > 0.0);
    let rho = exact_mission_robustness(&scenario, &trajectory);
    assert!(rho > 0.0, "two-station refill tour should satisfy, got {rho}");
}

#[test]
fn compilation_is_deterministic() {
    let scenario = mockup();
    let a = compile_mission(&scenario).unwrap();
    let b = compile_mission(&scenario).unwrap();
    assert_eq!(a.formula(), b.formula());
    assert_eq!(to_sexpr(a.formula()), to_sexpr(b.formula()));
}

#[test]
fn rigid_translation_preserves_satisfaction() {
    let scenario = mockup();
    let offset = [0.7, -0.4, 0.3];
    let moved = scenario.translated(offset);

    let hold = scenario.grid.duration_to_samples(scenario.handover_time);
    let stops = [
        (moved.operators[0].handover_box.center(), hold),
        (moved.operators[1].handover_box.center(), hold),
        (moved.refill_stations[0].center(), hold),
    ];
    let trajectory = tour(&moved, &stops);
    let rho = exact_mission_robustness(&moved, &trajectory);
    assert!(rho > 0.0, "translated tour should stay satisfying, got {rho}");

    let baseline = exact_mission_robustness(&scenario, &satisfying_tour(&scenario));
    assert!((rho - baseline).abs() < 1e-9, "translation changed robustness: {baseline} vs {rho}");
}
