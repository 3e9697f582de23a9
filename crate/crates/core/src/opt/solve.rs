//! Penalty-scheduled first-order ascent from the warm start.
//!
//! Outer iterations raise the penalty weight geometrically; the inner loop
//! takes normalized gradient-ascent steps with a backtracking line search
//! that only accepts non-decreasing objective values. The returned iterate
//! is the best one seen across the whole run, ranked by exact robustness
//! first and by the objective at the initial penalty weight second, so the
//! result can never be worse than the warm start under that ranking.

use log::{debug, warn};

use crate::dynamics::{energy, Trajectory};
use crate::mission::{compile_mission, Scenario};

use super::objective::{DecisionVector, ObjectiveContext, Residuals, SolveError};

#[derive(Debug, Clone, serde::Serialize)]
pub struct SolverConfig {
    pub max_outer_iterations: usize,
    pub max_inner_iterations: usize,
    /// Starting penalty weight; also the reference weight for ranking
    /// iterates across outer rounds.
    pub initial_penalty_weight: f64,
    /// Multiplicative weight increase per outer round, > 1.
    pub penalty_growth: f64,
    /// Inner loop stops when the objective improves less than this.
    pub objective_tolerance: f64,
    /// Initial ascent step, in units of the normalized gradient.
    pub initial_step: f64,
    pub min_step: f64,
    pub step_shrink: f64,
    pub step_grow: f64,
    pub max_step: f64,
    pub max_backtracks: usize,
    /// Spot-checks the gradient against finite differences at the warm
    /// start and logs a warning on disagreement.
    pub check_gradients: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_outer_iterations: 5,
            max_inner_iterations: 40,
            initial_penalty_weight: 10.0,
            penalty_growth: 10.0,
            objective_tolerance: 1e-6,
            initial_step: 0.05,
            min_step: 1e-7,
            step_shrink: 0.5,
            step_grow: 1.5,
            max_step: 0.5,
            max_backtracks: 30,
            check_gradients: false,
        }
    }
}

impl SolverConfig {
    fn assert_valid(&self) {
        assert!(self.max_outer_iterations > 0);
        assert!(self.max_inner_iterations > 0);
        assert!(self.initial_penalty_weight > 0.0);
        assert!(self.penalty_growth > 1.0, "penalty growth factor must exceed 1");
        assert!(self.objective_tolerance > 0.0);
        assert!(self.initial_step > 0.0 && self.min_step > 0.0);
        assert!(self.step_shrink > 0.0 && self.step_shrink < 1.0);
        assert!(self.step_grow >= 1.0 && self.max_step >= self.initial_step);
        assert!(self.max_backtracks > 0);
    }
}

/// One solver progress row, emitted per outer iteration.
#[derive(Debug, Clone, serde::Serialize)]
pub struct OuterLogRow {
    pub iter: usize,
    pub penalty_weight: f64,
    pub objective: f64,
    pub rho_exact: f64,
    pub rho_smooth: f64,
    pub energy: f64,
    pub max_residual: f64,
}

/// Optimized plan and its headline numbers.
#[derive(Debug, Clone)]
pub struct PlanResult {
    pub trajectory: Trajectory,
    pub exact_robustness: f64,
    pub smooth_robustness: f64,
    pub energy: f64,
    pub warm_energy: f64,
    pub residuals: Residuals,
    /// Accepted inner-loop steps across all outer rounds.
    pub iterations: usize,
    /// Exact robustness is positive.
    pub satisfied: bool,
    pub log: Vec<OuterLogRow>,
    /// Accepted inner-loop objective values, one series per outer round;
    /// non-decreasing within a round by the line-search accept rule.
    pub merit_history: Vec<Vec<f64>>,
}

/// Maximizes smooth robustness minus the energy term from the warm start.
///
/// Always returns a result; an unsatisfied outcome is reported through
/// [`PlanResult::satisfied`] rather than an error.
pub fn solve(
    scenario: &Scenario,
    warm: &Trajectory,
    config: &SolverConfig,
) -> Result<PlanResult, SolveError> {
    config.assert_valid();
    let mission = compile_mission(scenario)?;
    let mut ctx = ObjectiveContext::new(scenario, mission.formula())?;
    let mut dec = DecisionVector::from_trajectory(warm);
    let reference_weight = config.initial_penalty_weight;
    let warm_energy = energy(warm).total;

    if config.check_gradients {
        spot_check_gradient(&mut ctx, &dec, reference_weight)?;
    }

    // Candidates are slack-repaired (slacks never change the trajectory),
    // then ranked bound-feasible-first, by exact robustness, and by the
    // objective at the reference weight. The warm start is always in the
    // feasible class, so the result can never rank below it.
    let feasible = |residual: f64| residual <= 1e-6;
    let warm_eval = ctx.evaluate(&dec, reference_weight)?;
    let mut best_key = (
        feasible(warm_eval.residuals.max_any()),
        warm_eval.exact_robustness,
        warm_eval.objective,
    );
    let mut best_dec = dec.clone();

    let mut log = Vec::with_capacity(config.max_outer_iterations);
    let mut merit_history = Vec::with_capacity(config.max_outer_iterations);
    let mut iterations = 0usize;
    let mut weight = config.initial_penalty_weight;
    let mut step = config.initial_step;

    for outer in 0..config.max_outer_iterations {
        let mut merits = Vec::new();
        let mut previous = ctx.value(&dec, weight)?;
        for _ in 0..config.max_inner_iterations {
            let (value, gradient) = ctx.value_and_gradient(&dec, weight)?;
            let norm = gradient.inf_norm();
            if norm <= 1e-12 {
                break;
            }
            let mut alpha = step;
            let mut accepted = None;
            for _ in 0..config.max_backtracks {
                let trial = dec.stepped(&gradient, alpha / norm);
                let trial_value = ctx.value(&trial, weight)?;
                if trial_value >= value {
                    accepted = Some((trial, trial_value, alpha));
                    break;
                }
                alpha *= config.step_shrink;
                if alpha < config.min_step {
                    break;
                }
            }
            let Some((trial, trial_value, used_alpha)) = accepted else {
                break;
            };
            dec = trial;
            iterations += 1;
            merits.push(trial_value);
            step = (used_alpha * config.step_grow).min(config.max_step);

            let candidate_dec = dec.with_repaired_slacks();
            let candidate = ctx.evaluate(&candidate_dec, reference_weight)?;
            let key = (
                feasible(candidate.residuals.max_any()),
                candidate.exact_robustness,
                candidate.objective,
            );
            if key > best_key {
                best_key = key;
                best_dec = candidate_dec;
            }

            let improvement = trial_value - previous;
            previous = trial_value;
            if improvement.abs() < config.objective_tolerance {
                break;
            }
        }

        let snapshot = ctx.evaluate(&dec, weight)?;
        let (trajectory, _) = ctx.realize(&dec);
        log.push(OuterLogRow {
            iter: outer,
            penalty_weight: weight,
            objective: snapshot.objective,
            rho_exact: snapshot.exact_robustness,
            rho_smooth: snapshot.smooth_robustness,
            energy: energy(&trajectory).total,
            max_residual: snapshot.residuals.max_any(),
        });
        debug!(
            "outer {outer}: weight={weight:.3e} J={:.6} rho={:.6} residual={:.3e}",
            snapshot.objective,
            snapshot.exact_robustness,
            snapshot.residuals.max_any()
        );
        merit_history.push(merits);
        weight *= config.penalty_growth;
    }

    let final_eval = ctx.evaluate(&best_dec, reference_weight)?;
    let (trajectory, _) = ctx.realize(&best_dec);
    let total_energy = energy(&trajectory).total;
    Ok(PlanResult {
        satisfied: final_eval.exact_robustness > 0.0,
        exact_robustness: final_eval.exact_robustness,
        smooth_robustness: final_eval.smooth_robustness,
        energy: total_energy,
        warm_energy,
        residuals: final_eval.residuals,
        iterations,
        trajectory,
        log,
        merit_history,
    })
}

fn spot_check_gradient(
    ctx: &mut ObjectiveContext,
    dec: &DecisionVector,
    weight: f64,
) -> Result<(), SolveError> {
    let (_, gradient) = ctx.value_and_gradient(dec, weight)?;
    let n = dec.step_count();
    let h = 1e-6;
    let probes = [(0usize, 0usize), (1, n / 2), (2, n.saturating_sub(1))];
    for (axis, k) in probes {
        let mut plus = dec.clone();
        plus.accelerations[axis][k] += h;
        let mut minus = dec.clone();
        minus.accelerations[axis][k] -= h;
        let fd = (ctx.value(&plus, weight)? - ctx.value(&minus, weight)?) / (2.0 * h);
        let analytic = gradient.accelerations[axis][k];
        let scale = fd.abs().max(analytic.abs()).max(1e-6);
        if (fd - analytic).abs() / scale > 1e-3 {
            warn!(
                "gradient check mismatch at axis {axis} step {k}: analytic {analytic:.6e} vs finite-difference {fd:.6e}"
            );
        }
    }
    Ok(())
}
