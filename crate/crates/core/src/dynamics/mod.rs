//! Per-axis double-integrator motion primitives.
//!
//! The vehicle is modeled as three independent double integrators driven by
//! piecewise-constant acceleration on the sampling grid. Rest-to-rest
//! segments use symmetric ramp/cruise/ramp acceleration profiles synthesized
//! directly in discrete time, so sampled states hit the target exactly and
//! never exceed the configured limits.

mod csv;
mod rest_to_rest;

pub use csv::{read_trajectory_csv, write_trajectory_csv, TrajectoryCsvError};
pub use rest_to_rest::{rest_to_rest, MotionSegment};


use crate::scalar::Scalar;
use crate::stl::TimeGrid;

/// Symmetric per-axis velocity and acceleration limits.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MotionLimits {
    /// Velocity bound per axis [m/s].
    pub max_velocity: f64,
    /// Acceleration bound per axis [m/s²].
    pub max_acceleration: f64,
}

impl MotionLimits {
    pub fn new(max_velocity: f64, max_acceleration: f64) -> Result<Self, DynamicsError> {
        if !(max_velocity > 0.0 && max_acceleration > 0.0) {
            return Err(DynamicsError::NonPositiveLimits { max_velocity, max_acceleration });
        }
        Ok(Self { max_velocity, max_acceleration })
    }
}

/// Position and velocity of one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisState<T = f64> {
    pub position: T,
    pub velocity: T,
}

impl<T: Scalar> AxisState<T> {
    pub fn new(position: T, velocity: T) -> Self {
        Self { position, velocity }
    }

    pub fn at_rest(position: T) -> Self {
        Self { position, velocity: T::zero() }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("axis {axis} has {got} acceleration steps, grid expects {expected}")]
    LengthMismatch { axis: usize, got: usize, expected: usize },
    #[error("motion limits must be positive, got v_max={max_velocity}, a_max={max_acceleration}")]
    NonPositiveLimits { max_velocity: f64, max_acceleration: f64 },
}

/// One explicit-integration step under constant acceleration.
///
/// # Panics
/// Panics when `dt` is not strictly positive.
pub fn step<T: Scalar>(state: AxisState<T>, accel: T, dt: T) -> AxisState<T> {
    assert!(dt > T::zero(), "step requires dt > 0");
    let half = T::of(0.5);
    AxisState {
        position: state.position + state.velocity * dt + half * accel * dt * dt,
        velocity: state.velocity + accel * dt,
    }
}

/// Iterated [`step`] over an acceleration sequence, returning the position
/// and velocity sequences (one sample longer than the input).
pub fn rollout_axis<T: Scalar>(initial: AxisState<T>, accels: &[T], dt: T) -> (Vec<T>, Vec<T>) {
    let mut positions = Vec::with_capacity(accels.len() + 1);
    let mut velocities = Vec::with_capacity(accels.len() + 1);
    let mut state = initial;
    positions.push(state.position);
    velocities.push(state.velocity);
    for &a in accels {
        state = step(state, a, dt);
        positions.push(state.position);
        velocities.push(state.velocity);
    }
    (positions, velocities)
}

/// Time-gridded three-axis state trajectory.
///
/// Positions and velocities always satisfy the double-integrator recurrence
/// for the stored accelerations, because the only constructor is a rollout.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    grid: TimeGrid,
    positions: [Vec<f64>; 3],
    velocities: [Vec<f64>; 3],
    accelerations: [Vec<f64>; 3],
    slacks: Option<[Vec<f64>; 3]>,
    heading: Option<Vec<f64>>,
}

impl Trajectory {
    /// Rolls out the acceleration sequences from the initial per-axis states.
    pub fn from_rollout(
        grid: TimeGrid,
        initial: [AxisState; 3],
        accelerations: [Vec<f64>; 3],
    ) -> Result<Self, DynamicsError> {
        let expected = grid.step_count();
        for (axis, accels) in accelerations.iter().enumerate() {
            if accels.len() != expected {
                return Err(DynamicsError::LengthMismatch { axis, got: accels.len(), expected });
            }
        }
        let dt = grid.sampling_period();
        let mut positions: [Vec<f64>; 3] = Default::default();
        let mut velocities: [Vec<f64>; 3] = Default::default();
        for axis in 0..3 {
            let (p, v) = rollout_axis(initial[axis], &accelerations[axis], dt);
            positions[axis] = p;
            velocities[axis] = v;
        }
        Ok(Self { grid, positions, velocities, accelerations, slacks: None, heading: None })
    }

    /// Hover trajectory: at rest at `point` for the whole grid.
    pub fn hover(grid: TimeGrid, point: [f64; 3]) -> Self {
        let accels: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; grid.step_count()]);
        let initial = std::array::from_fn(|axis| AxisState::at_rest(point[axis]));
        Self::from_rollout(grid, initial, accels).expect("hover rollout lengths match by construction")
    }

    pub fn with_slacks(mut self, slacks: [Vec<f64>; 3]) -> Result<Self, DynamicsError> {
        let expected = self.grid.step_count();
        for (axis, values) in slacks.iter().enumerate() {
            if values.len() != expected {
                return Err(DynamicsError::LengthMismatch { axis, got: values.len(), expected });
            }
        }
        self.slacks = Some(slacks);
        Ok(self)
    }

    pub fn with_heading(mut self, heading: Vec<f64>) -> Result<Self, DynamicsError> {
        if heading.len() != self.grid.sample_count() {
            return Err(DynamicsError::LengthMismatch {
                axis: 0,
                got: heading.len(),
                expected: self.grid.sample_count(),
            });
        }
        self.heading = Some(heading);
        Ok(self)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn positions(&self, axis: usize) -> &[f64] {
        &self.positions[axis]
    }

    pub fn velocities(&self, axis: usize) -> &[f64] {
        &self.velocities[axis]
    }

    pub fn accelerations(&self, axis: usize) -> &[f64] {
        &self.accelerations[axis]
    }

    pub fn slacks(&self) -> Option<&[Vec<f64>; 3]> {
        self.slacks.as_ref()
    }

    pub fn heading(&self) -> Option<&[f64]> {
        self.heading.as_deref()
    }

    /// Position of all three axes at sample `k`.
    pub fn point_at(&self, k: usize) -> [f64; 3] {
        std::array::from_fn(|axis| self.positions[axis][k])
    }

    /// Largest velocity magnitude over all axes and samples.
    pub fn peak_velocity(&self) -> f64 {
        self.velocities
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0, |acc, &v| acc.max(v.abs()))
    }

    /// Largest acceleration magnitude over all axes and steps.
    pub fn peak_acceleration(&self) -> f64 {
        self.accelerations
            .iter()
            .flat_map(|a| a.iter())
            .fold(0.0, |acc, &a| acc.max(a.abs()))
    }
}

/// Heading that follows the planar velocity direction, holding the previous
/// value (initially zero) whenever the planar speed drops below `speed_floor`.
pub fn heading_profile(trajectory: &Trajectory, speed_floor: f64) -> Vec<f64> {
    let vx = trajectory.velocities(0);
    let vy = trajectory.velocities(1);
    let mut heading = Vec::with_capacity(vx.len());
    let mut current = 0.0;
    for k in 0..vx.len() {
        if vx[k].hypot(vy[k]) >= speed_floor {
            current = vy[k].atan2(vx[k]);
        }
        heading.push(current);
    }
    heading
}

/// Default planar-speed floor for [`heading_profile`] [m/s].
pub const DEFAULT_HEADING_SPEED_FLOOR: f64 = 0.05;

/// Squared-acceleration energy proxy.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    /// Total over the horizon: `sum_k sum_j a_k_j^2 · dt`.
    pub total: f64,
    /// Per-step contribution `sum_j a_k_j^2 · dt`.
    pub per_step: Vec<f64>,
}

/// Integrates squared acceleration over the trajectory.
pub fn energy(trajectory: &Trajectory) -> EnergyProfile {
    let dt = trajectory.grid().sampling_period();
    let steps = trajectory.grid().step_count();
    let mut per_step = vec![0.0; steps];
    for axis in 0..3 {
        for (k, &a) in trajectory.accelerations(axis).iter().enumerate() {
            per_step[k] += a * a * dt;
        }
    }
    EnergyProfile { total: per_step.iter().sum(), per_step }
}
