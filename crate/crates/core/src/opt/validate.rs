//! Final-check validation under exact semantics.

use crate::dynamics::{energy, Trajectory};
use crate::mission::{
    achieved_holds, compile_mission, derive_payload, signal_from_trajectory, Scenario,
};
use crate::stl::CompiledFormula;

use super::objective::{Residuals, SolveError};

/// Residual tolerance for a passing trajectory.
pub const RESIDUAL_TOLERANCE: f64 = 1e-6;

/// Exact-semantics validation report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ValidationReport {
    pub exact_robustness: f64,
    pub smooth_robustness: f64,
    /// Exact robustness of each named mission clause.
    pub clause_robustness: Vec<(String, f64)>,
    pub residuals: Residuals,
    pub energy: f64,
    /// Payload value per sample.
    pub payload: Vec<u32>,
    /// Longest in-box dwell per operator [s].
    pub operator_holds_s: Vec<f64>,
    /// Longest in-box dwell per refill station [s].
    pub station_holds_s: Vec<f64>,
    /// Exact robustness positive and residuals within tolerance.
    pub pass: bool,
}

/// Recomputes payload, robustness (exact and smooth), per-clause
/// robustness, constraint residuals, and hold durations for `trajectory`.
///
/// # Panics
/// Panics when the trajectory is not sampled on the scenario grid; callers
/// ingesting external files must check grids first.
pub fn validate(
    trajectory: &Trajectory,
    scenario: &Scenario,
) -> Result<ValidationReport, SolveError> {
    let mission = compile_mission(scenario)?;
    let payload = derive_payload(trajectory, scenario);
    let signal = signal_from_trajectory(trajectory, &payload);

    let compiled = CompiledFormula::compile(mission.formula(), &signal)?;
    let exact_robustness = compiled.exact(&signal, 0)?;
    let smooth_robustness = compiled.smooth(&signal, 0)?;
    let mut clause_robustness = Vec::with_capacity(mission.clauses().len());
    for (name, clause) in mission.clauses() {
        let value = CompiledFormula::compile(clause, &signal)?.exact(&signal, 0)?;
        clause_robustness.push((name.clone(), value));
    }

    let mut residuals = Residuals {
        max_velocity_excess: 0.0,
        max_acceleration_excess: 0.0,
        max_slack_violation: 0.0,
    };
    for axis in 0..3 {
        for &v in trajectory.velocities(axis) {
            residuals.max_velocity_excess = residuals
                .max_velocity_excess
                .max(v.abs() - scenario.limits.max_velocity);
        }
        for &a in trajectory.accelerations(axis) {
            residuals.max_acceleration_excess = residuals
                .max_acceleration_excess
                .max(a.abs() - scenario.limits.max_acceleration);
        }
    }
    if let Some(slacks) = trajectory.slacks() {
        for axis in 0..3 {
            for (&a, &e) in trajectory.accelerations(axis).iter().zip(&slacks[axis]) {
                residuals.max_slack_violation =
                    residuals.max_slack_violation.max(a * a - e).max(-e);
            }
        }
    }
    residuals.max_velocity_excess = residuals.max_velocity_excess.max(0.0);
    residuals.max_acceleration_excess = residuals.max_acceleration_excess.max(0.0);
    residuals.max_slack_violation = residuals.max_slack_violation.max(0.0);

    let (operator_holds_s, station_holds_s) = achieved_holds(trajectory, scenario);
    let pass = exact_robustness > 0.0 && residuals.max_any() <= RESIDUAL_TOLERANCE;
    Ok(ValidationReport {
        exact_robustness,
        smooth_robustness,
        clause_robustness,
        residuals,
        energy: energy(trajectory).total,
        payload,
        operator_holds_s,
        station_holds_s,
        pass,
    })
}
