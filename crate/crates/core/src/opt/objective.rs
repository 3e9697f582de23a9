//! Penalized planning objective and its gradient.
//!
//! Single shooting: the decision variables are the per-axis acceleration
//! and slack sequences; states are eliminated by rolling out from the depot
//! at rest. The objective is
//!
//! `J = smooth_robustness - q·sum(eps^2) - P`
//!
//! where `P` holds quadratic penalties for velocity/acceleration bound
//! violations, `a^2 > eps`, and `eps < 0`, at the current penalty weight.
//! The robustness term is differentiated in forward mode by rolling out
//! dual-number accelerations and evaluating the compiled formula on the
//! dual signal; the energy and penalty terms are differentiated in closed
//! form.

use crate::dynamics::{rollout_axis, AxisState, Trajectory};
use crate::mission::{derive_payload, derive_payload_from_positions, signal_from_parts, Scenario};
use crate::scalar::Dual;
use crate::stl::{CompiledFormula, EvalError, EvalWorkspace, Formula, Signal};

/// Tangent lanes per forward-mode sweep.
const LANES: usize = 32;

type D = Dual<f64, LANES>;

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    #[error("objective produced a non-finite value")]
    NonFiniteValue,
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Scenario(#[from] crate::mission::ScenarioError),
}

/// Acceleration and slack sequences, each `N` long per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector {
    pub accelerations: [Vec<f64>; 3],
    pub slacks: [Vec<f64>; 3],
}

impl DecisionVector {
    /// Initializes from a trajectory: its accelerations, with slacks set to
    /// the squared accelerations.
    pub fn from_trajectory(trajectory: &Trajectory) -> Self {
        let accelerations: [Vec<f64>; 3] =
            std::array::from_fn(|axis| trajectory.accelerations(axis).to_vec());
        let slacks = std::array::from_fn(|axis| {
            accelerations[axis].iter().map(|a| a * a).collect()
        });
        Self { accelerations, slacks }
    }

    pub fn step_count(&self) -> usize {
        self.accelerations[0].len()
    }

    /// `self + scale · direction`.
    pub fn stepped(&self, direction: &DecisionVector, scale: f64) -> DecisionVector {
        let add = |a: &[Vec<f64>; 3], d: &[Vec<f64>; 3]| -> [Vec<f64>; 3] {
            std::array::from_fn(|axis| {
                a[axis].iter().zip(&d[axis]).map(|(x, g)| x + scale * g).collect()
            })
        };
        DecisionVector {
            accelerations: add(&self.accelerations, &direction.accelerations),
            slacks: add(&self.slacks, &direction.slacks),
        }
    }

    /// Largest absolute entry.
    pub fn inf_norm(&self) -> f64 {
        self.accelerations
            .iter()
            .chain(self.slacks.iter())
            .flat_map(|v| v.iter())
            .fold(0.0, |m, &x| m.max(x.abs()))
    }

    fn zeros_like(&self) -> DecisionVector {
        let n = self.step_count();
        DecisionVector {
            accelerations: std::array::from_fn(|_| vec![0.0; n]),
            slacks: std::array::from_fn(|_| vec![0.0; n]),
        }
    }

    /// Raises every slack to at least the squared acceleration, which
    /// restores the slack constraints without touching the trajectory.
    pub fn with_repaired_slacks(&self) -> DecisionVector {
        DecisionVector {
            accelerations: self.accelerations.clone(),
            slacks: std::array::from_fn(|axis| {
                self.accelerations[axis]
                    .iter()
                    .zip(&self.slacks[axis])
                    .map(|(a, e)| e.max(a * a).max(0.0))
                    .collect()
            }),
        }
    }
}

/// Constraint violation magnitudes of an iterate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Residuals {
    pub max_velocity_excess: f64,
    pub max_acceleration_excess: f64,
    pub max_slack_violation: f64,
}

impl Residuals {
    pub fn max_any(&self) -> f64 {
        self.max_velocity_excess
            .max(self.max_acceleration_excess)
            .max(self.max_slack_violation)
    }
}

/// Fully evaluated iterate.
#[derive(Debug, Clone)]
pub struct Iterate {
    pub objective: f64,
    pub smooth_robustness: f64,
    pub exact_robustness: f64,
    pub energy_term: f64,
    pub penalty: f64,
    pub residuals: Residuals,
}

/// Reusable evaluation state for one scenario/formula pair.
pub struct ObjectiveContext<'a> {
    scenario: &'a Scenario,
    compiled: CompiledFormula<f64>,
    compiled_dual: CompiledFormula<D>,
    workspace: EvalWorkspace<f64>,
    workspace_dual: EvalWorkspace<D>,
}

impl<'a> ObjectiveContext<'a> {
    pub fn new(scenario: &'a Scenario, formula: &Formula<f64>) -> Result<Self, SolveError> {
        let layout = hover_signal(scenario);
        let compiled = CompiledFormula::compile(formula, &layout)?;
        let dual_formula = formula.map_scalar(&D::constant);
        let dual_layout = layout.map(|_, _, v| D::constant(v));
        let compiled_dual = CompiledFormula::compile(&dual_formula, &dual_layout)?;
        Ok(Self {
            scenario,
            compiled,
            compiled_dual,
            workspace: EvalWorkspace::new(),
            workspace_dual: EvalWorkspace::new(),
        })
    }

    fn rollout(&self, dec: &DecisionVector) -> ([Vec<f64>; 3], [Vec<f64>; 3]) {
        let dt = self.scenario.grid.sampling_period();
        let mut positions: [Vec<f64>; 3] = Default::default();
        let mut velocities: [Vec<f64>; 3] = Default::default();
        for axis in 0..3 {
            let (p, v) = rollout_axis(
                AxisState::at_rest(self.scenario.depot[axis]),
                &dec.accelerations[axis],
                dt,
            );
            positions[axis] = p;
            velocities[axis] = v;
        }
        (positions, velocities)
    }

    /// Trajectory (with slacks attached) and frozen payload of an iterate.
    pub fn realize(&self, dec: &DecisionVector) -> (Trajectory, Vec<u32>) {
        let initial =
            std::array::from_fn(|axis| AxisState::at_rest(self.scenario.depot[axis]));
        let trajectory = Trajectory::from_rollout(
            self.scenario.grid,
            initial,
            dec.accelerations.clone(),
        )
        .expect("decision vector lengths match the grid")
        .with_slacks(dec.slacks.clone())
        .expect("slack lengths match the grid");
        let payload = derive_payload(&trajectory, self.scenario);
        (trajectory, payload)
    }

    /// Objective value at `penalty_weight`.
    pub fn value(&mut self, dec: &DecisionVector, penalty_weight: f64) -> Result<f64, SolveError> {
        Ok(self.evaluate(dec, penalty_weight)?.objective)
    }

    /// Full iterate evaluation at `penalty_weight`.
    pub fn evaluate(
        &mut self,
        dec: &DecisionVector,
        penalty_weight: f64,
    ) -> Result<Iterate, SolveError> {
        let (positions, velocities) = self.rollout(dec);
        let payload = self.payload_of(&positions);
        self.evaluate_parts(dec, &positions, &velocities, &payload, penalty_weight)
    }

    /// Frozen payload for the rolled-out positions.
    fn payload_of(&self, positions: &[Vec<f64>; 3]) -> Vec<u32> {
        derive_payload_from_positions(positions, self.scenario)
    }

    fn evaluate_parts(
        &mut self,
        dec: &DecisionVector,
        positions: &[Vec<f64>; 3],
        velocities: &[Vec<f64>; 3],
        payload: &[u32],
        penalty_weight: f64,
    ) -> Result<Iterate, SolveError> {
        let signal =
            signal_from_parts(self.scenario.grid, positions, Some(velocities), payload);
        let smooth = self.compiled.smooth_with(&mut self.workspace, &signal, 0)?;
        let exact = self.compiled.exact_with(&mut self.workspace, &signal, 0)?;

        let q = self.scenario.energy_weight;
        let energy_term: f64 = q
            * dec
                .slacks
                .iter()
                .flat_map(|axis| axis.iter())
                .map(|e| e * e)
                .sum::<f64>();
        let (penalty, residuals) = self.penalty_and_residuals(dec, velocities, penalty_weight);
        let objective = smooth - energy_term - penalty;
        if !objective.is_finite() {
            return Err(SolveError::NonFiniteValue);
        }
        Ok(Iterate {
            objective,
            smooth_robustness: smooth,
            exact_robustness: exact,
            energy_term,
            penalty,
            residuals,
        })
    }

    fn penalty_and_residuals(
        &self,
        dec: &DecisionVector,
        velocities: &[Vec<f64>; 3],
        weight: f64,
    ) -> (f64, Residuals) {
        let v_max = self.scenario.limits.max_velocity;
        let a_max = self.scenario.limits.max_acceleration;
        let mut penalty = 0.0;
        let mut res = Residuals {
            max_velocity_excess: 0.0,
            max_acceleration_excess: 0.0,
            max_slack_violation: 0.0,
        };
        for axis in 0..3 {
            for &v in &velocities[axis] {
                let excess = (v.abs() - v_max).max(0.0);
                penalty += weight * excess * excess;
                res.max_velocity_excess = res.max_velocity_excess.max(excess);
            }
            for (&a, &e) in dec.accelerations[axis].iter().zip(&dec.slacks[axis]) {
                let excess = (a.abs() - a_max).max(0.0);
                penalty += weight * excess * excess;
                res.max_acceleration_excess = res.max_acceleration_excess.max(excess);

                let slack_gap = (a * a - e).max(0.0);
                let negative = (-e).max(0.0);
                penalty += weight * (slack_gap * slack_gap + negative * negative);
                res.max_slack_violation = res.max_slack_violation.max(slack_gap).max(negative);
            }
        }
        (penalty, res)
    }

    /// Objective value and gradient at `penalty_weight`.
    pub fn value_and_gradient(
        &mut self,
        dec: &DecisionVector,
        penalty_weight: f64,
    ) -> Result<(f64, DecisionVector), SolveError> {
        let (positions, velocities) = self.rollout(dec);
        let payload = self.payload_of(&positions);
        let iterate =
            self.evaluate_parts(dec, &positions, &velocities, &payload, penalty_weight)?;
        let mut gradient = dec.zeros_like();

        let q = self.scenario.energy_weight;
        let w = penalty_weight;
        let v_max = self.scenario.limits.max_velocity;
        let a_max = self.scenario.limits.max_acceleration;
        let dt = self.scenario.grid.sampling_period();
        let n = dec.step_count();

        for axis in 0..3 {
            // Velocity-bound penalty reaches a_m through every later sample.
            let mut suffix = 0.0;
            for k in (1..=n).rev() {
                let v = velocities[axis][k];
                let excess = (v.abs() - v_max).max(0.0);
                suffix += 2.0 * w * excess * v.signum() * dt;
                gradient.accelerations[axis][k - 1] -= suffix;
            }
            for k in 0..n {
                let a = dec.accelerations[axis][k];
                let e = dec.slacks[axis][k];
                let a_excess = (a.abs() - a_max).max(0.0);
                gradient.accelerations[axis][k] -= 2.0 * w * a_excess * a.signum();
                let slack_gap = (a * a - e).max(0.0);
                gradient.accelerations[axis][k] -= 4.0 * w * slack_gap * a;
                gradient.slacks[axis][k] = -2.0 * q * e + 2.0 * w * slack_gap + 2.0 * w * (-e).max(0.0);
            }
        }

        // Robustness gradient: forward sweeps of LANES seeded accelerations.
        let coords: Vec<(usize, usize)> =
            (0..3).flat_map(|axis| (0..n).map(move |k| (axis, k))).collect();
        for chunk in coords.chunks(LANES) {
            let mut dual_accels: [Vec<D>; 3] = std::array::from_fn(|axis| {
                dec.accelerations[axis].iter().map(|&a| D::constant(a)).collect()
            });
            for (lane, &(axis, k)) in chunk.iter().enumerate() {
                dual_accels[axis][k].eps[lane] = 1.0;
            }
            let mut dual_positions: [Vec<D>; 3] = Default::default();
            let mut dual_velocities: [Vec<D>; 3] = Default::default();
            for axis in 0..3 {
                let (p, v) = rollout_axis(
                    AxisState::at_rest(D::constant(self.scenario.depot[axis])),
                    &dual_accels[axis],
                    D::constant(dt),
                );
                dual_positions[axis] = p;
                dual_velocities[axis] = v;
            }
            let dual_signal = signal_from_parts(
                self.scenario.grid,
                &dual_positions,
                Some(&dual_velocities),
                &payload,
            );
            let smooth =
                self.compiled_dual.smooth_with(&mut self.workspace_dual, &dual_signal, 0)?;
            for (lane, &(axis, k)) in chunk.iter().enumerate() {
                gradient.accelerations[axis][k] += smooth.tangent(lane);
            }
        }

        if gradient.inf_norm().is_nan() {
            return Err(SolveError::NonFiniteValue);
        }
        Ok((iterate.objective, gradient))
    }
}

fn hover_signal(scenario: &Scenario) -> Signal<f64> {
    let trajectory = Trajectory::hover(scenario.grid, scenario.depot);
    let payload = vec![scenario.capacity; scenario.grid.sample_count()];
    crate::mission::signal_from_trajectory(&trajectory, &payload)
}

/// One-shot objective evaluation, as value plus gradient.
pub fn objective(
    dec: &DecisionVector,
    scenario: &Scenario,
    formula: &Formula<f64>,
    penalty_weight: f64,
) -> Result<(f64, DecisionVector), SolveError> {
    ObjectiveContext::new(scenario, formula)?.value_and_gradient(dec, penalty_weight)
}
