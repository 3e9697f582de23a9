//! Scenario-to-formula compilation.
//!
//! The mission formula is the conjunction of: safety over the whole horizon
//! (stay in the workspace, outside obstacles and behind-regions); one
//! reach-and-hold clause per operator with the approach-preference
//! requirement at the hold start; a payload-aware refill clause; and the
//! stay-home clause (once inside a station box, remain there).
//!
//! Box membership predicates are normalized by the box half-width per axis,
//! so margins are dimensionless and bounded by 1 inside the box.

use crate::stl::{Formula, Interval, Predicate};

use super::{Box3, PrefCombinator, Scenario, ScenarioError};

/// Position channel names, indexed by axis.
pub const CHANNEL_POSITION: [&str; 3] = ["p1", "p2", "p3"];
/// Velocity channel names, indexed by axis.
pub const CHANNEL_VELOCITY: [&str; 3] = ["v1", "v2", "v3"];
/// Payload channel name; carries +1 when payload remains, -1 when empty.
pub const CHANNEL_PAYLOAD: &str = "c";

/// Compiled mission formula plus named sub-clauses for reporting.
///
/// The sub-clauses decompose the top-level conjunction (safety split per
/// kind), so under exact semantics the formula robustness equals the
/// minimum over clause robustness values.
#[derive(Debug, Clone)]
pub struct MissionFormula {
    formula: Formula<f64>,
    clauses: Vec<(String, Formula<f64>)>,
}

impl MissionFormula {
    pub fn formula(&self) -> &Formula<f64> {
        &self.formula
    }

    pub fn clauses(&self) -> &[(String, Formula<f64>)] {
        &self.clauses
    }

    pub fn into_formula(self) -> Formula<f64> {
        self.formula
    }
}

/// Membership in `b` as the conjunction of six normalized margins.
pub fn in_box(b: &Box3) -> Formula<f64> {
    let lower = b.lower();
    let upper = b.upper();
    let half = b.half_widths();
    let mut margins = Vec::with_capacity(6);
    for axis in 0..3 {
        let w = 1.0 / half[axis];
        margins.push(Formula::pred(Predicate::affine(CHANNEL_POSITION[axis], w, -lower[axis] * w)));
        margins.push(Formula::pred(Predicate::affine(CHANNEL_POSITION[axis], -w, upper[axis] * w)));
    }
    Formula::and(margins)
}

fn outside_box(b: &Box3) -> Formula<f64> {
    Formula::not(in_box(b))
}

/// Positive exactly when the payload is non-empty.
fn payload_nonzero() -> Formula<f64> {
    Formula::pred(Predicate::affine(CHANNEL_PAYLOAD, 1.0, 0.0))
}

/// Compiles the full mission formula.
pub fn compile_formula(scenario: &Scenario) -> Result<Formula<f64>, ScenarioError> {
    compile_mission(scenario).map(MissionFormula::into_formula)
}

/// Compiles the mission formula along with its named clauses.
pub fn compile_mission(scenario: &Scenario) -> Result<MissionFormula, ScenarioError> {
    if scenario.operators.is_empty() {
        return Err(ScenarioError::Invalid(
            "mission formula needs at least one operator".into(),
        ));
    }
    if scenario.refill_stations.is_empty() {
        return Err(ScenarioError::Invalid(
            "mission formula needs at least one refill station".into(),
        ));
    }
    let horizon = scenario.mission_time;
    let whole = Interval::new(0.0, horizon).expect("mission horizon is positive");
    let dt = scenario.grid.sampling_period();

    let mut clauses: Vec<(String, Formula<f64>)> = Vec::new();

    // Safety: workspace, obstacles, behind regions, all under one Always.
    let workspace = in_box(&scenario.workspace);
    clauses.push(("workspace".into(), Formula::always(whole, workspace.clone())));
    let mut safety = vec![workspace];
    if !scenario.obstacles.is_empty() {
        let obstacles = Formula::and(scenario.obstacles.iter().map(outside_box).collect());
        clauses.push(("obstacles".into(), Formula::always(whole, obstacles.clone())));
        safety.push(obstacles);
    }
    let behind = Formula::and(
        scenario.operators.iter().map(|op| outside_box(&op.behind_box)).collect(),
    );
    clauses.push(("behind".into(), Formula::always(whole, behind.clone())));
    safety.push(behind);
    let mut parts = vec![Formula::always(whole, Formula::and(safety))];

    // Reach-and-hold per operator, with the approach preference at the
    // start of the hold.
    let handover_window = Interval::new(0.0, horizon - scenario.handover_time)
        .expect("handover time is shorter than the mission");
    let hold = Interval::new(0.0, scenario.handover_time).expect("positive hold");
    for op in &scenario.operators {
        let pref_boxes: Vec<Formula<f64>> =
            op.preferences.iter().map(|(_, b)| in_box(b)).collect();
        let preference = match op.pref_combinator {
            PrefCombinator::Any => Formula::or(pref_boxes),
            PrefCombinator::All => Formula::and(pref_boxes),
        };
        let clause = Formula::eventually(
            handover_window,
            Formula::and(vec![preference, Formula::always(hold, in_box(&op.handover_box))]),
        );
        clauses.push((format!("handover_{}", op.id), clause.clone()));
        parts.push(clause);
    }

    // Refill: somewhere in the window, either the payload is non-empty or a
    // full refill hold runs at one of the stations.
    let refill_window = Interval::new(0.0, horizon - scenario.refill_time)
        .expect("refill time is shorter than the mission");
    let refill_hold = Interval::new(0.0, scenario.refill_time).expect("positive hold");
    let refill = Formula::or(
        scenario
            .refill_stations
            .iter()
            .map(|station| {
                Formula::eventually(
                    refill_window,
                    Formula::or(vec![
                        payload_nonzero(),
                        Formula::always(refill_hold, in_box(station)),
                    ]),
                )
            })
            .collect(),
    );
    clauses.push(("refill".into(), refill.clone()));
    parts.push(refill);

    // Stay home: once inside a station box, stay inside at the next sample.
    let home_window =
        Interval::new(dt, horizon - dt).expect("horizon is at least two samples");
    let next_step = Interval::new(dt, dt).expect("one-step window");
    let home = Formula::or(
        scenario
            .refill_stations
            .iter()
            .map(|station| {
                Formula::always(
                    home_window,
                    Formula::or(vec![
                        Formula::not(in_box(station)),
                        Formula::next(next_step, in_box(station)),
                    ]),
                )
            })
            .collect(),
    );
    clauses.push(("home".into(), home.clone()));
    parts.push(home);

    Ok(MissionFormula { formula: Formula::and(parts), clauses })
}
