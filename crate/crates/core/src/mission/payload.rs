//! Payload automaton and signal assembly.
//!
//! The payload count is a deterministic function of the trajectory: it
//! starts at capacity, drops by one at the sample following the first
//! completed hold inside each operator's handover box, and resets to
//! capacity at the sample following any completed hold inside a refill
//! station. A hold of `T` seconds spans `samples(T) + 1` consecutive
//! in-box samples, matching the index window of an `always [0, T]`.

use crate::dynamics::Trajectory;
use crate::scalar::Scalar;
use crate::stl::{Signal, TimeGrid};

use super::compile::{CHANNEL_PAYLOAD, CHANNEL_POSITION, CHANNEL_VELOCITY};
use super::Scenario;

/// Per-sample payload derived by scanning the trajectory.
pub fn derive_payload(trajectory: &Trajectory, scenario: &Scenario) -> Vec<u32> {
    assert_eq!(
        trajectory.grid(),
        &scenario.grid,
        "trajectory must be sampled on the scenario grid"
    );
    derive_payload_at(|k| trajectory.point_at(k), scenario)
}

/// Payload automaton over raw position samples.
pub fn derive_payload_from_positions(positions: &[Vec<f64>; 3], scenario: &Scenario) -> Vec<u32> {
    assert_eq!(positions[0].len(), scenario.grid.sample_count());
    derive_payload_at(|k| std::array::from_fn(|axis| positions[axis][k]), scenario)
}

fn derive_payload_at(point_at: impl Fn(usize) -> [f64; 3], scenario: &Scenario) -> Vec<u32> {
    let samples = scenario.grid.sample_count();
    let handover_hold = scenario.grid.duration_to_samples(scenario.handover_time) + 1;
    let refill_hold = scenario.grid.duration_to_samples(scenario.refill_time) + 1;

    let mut payload = Vec::with_capacity(samples);
    let mut current = scenario.capacity;
    let mut operator_streak = vec![0usize; scenario.operators.len()];
    let mut operator_done = vec![false; scenario.operators.len()];
    let mut station_streak = vec![0usize; scenario.refill_stations.len()];

    for k in 0..samples {
        payload.push(current);
        let point = point_at(k);
        // Events fire at the completion sample and change the value carried
        // into the next sample; a refill completing together with a
        // handover wins.
        for (i, op) in scenario.operators.iter().enumerate() {
            if op.handover_box.contains(point) {
                operator_streak[i] += 1;
            } else {
                operator_streak[i] = 0;
            }
            if operator_streak[i] == handover_hold && !operator_done[i] {
                operator_done[i] = true;
                current = current.saturating_sub(1);
            }
        }
        for (i, station) in scenario.refill_stations.iter().enumerate() {
            if station.contains(point) {
                station_streak[i] += 1;
            } else {
                station_streak[i] = 0;
            }
            if station_streak[i] == refill_hold {
                current = scenario.capacity;
            }
        }
    }
    payload
}

/// Hold durations actually achieved by the trajectory, for reporting:
/// longest run of consecutive samples inside each operator box and each
/// station box, in seconds.
pub fn achieved_holds(trajectory: &Trajectory, scenario: &Scenario) -> (Vec<f64>, Vec<f64>) {
    let dt = scenario.grid.sampling_period();
    let run_seconds = |contains: &dyn Fn([f64; 3]) -> bool| -> f64 {
        let mut best = 0usize;
        let mut run = 0usize;
        for k in 0..scenario.grid.sample_count() {
            if contains(trajectory.point_at(k)) {
                run += 1;
                best = best.max(run);
            } else {
                run = 0;
            }
        }
        if best == 0 {
            0.0
        } else {
            (best - 1) as f64 * dt
        }
    };
    let operators = scenario
        .operators
        .iter()
        .map(|op| run_seconds(&|p| op.handover_box.contains(p)))
        .collect();
    let stations = scenario
        .refill_stations
        .iter()
        .map(|st| run_seconds(&|p| st.contains(p)))
        .collect();
    (operators, stations)
}

/// Payload encoded as a +1/-1 channel.
pub fn payload_channel<S: Scalar>(payload: &[u32]) -> Vec<S> {
    payload.iter().map(|&c| if c > 0 { S::one() } else { -S::one() }).collect()
}

/// Builds the evaluation signal: positions, velocities, and the payload
/// channel.
pub fn signal_from_trajectory(trajectory: &Trajectory, payload: &[u32]) -> Signal<f64> {
    let mut signal = Signal::new(*trajectory.grid());
    for axis in 0..3 {
        signal
            .add_channel(CHANNEL_POSITION[axis], trajectory.positions(axis).to_vec())
            .expect("fresh channel");
        signal
            .add_channel(CHANNEL_VELOCITY[axis], trajectory.velocities(axis).to_vec())
            .expect("fresh channel");
    }
    signal.add_channel(CHANNEL_PAYLOAD, payload_channel(payload)).expect("fresh channel");
    signal
}

/// Builds the evaluation signal from raw per-axis sequences, generic over
/// the scalar type so dual-number rollouts can be evaluated directly.
pub fn signal_from_parts<S: Scalar>(
    grid: TimeGrid,
    positions: &[Vec<S>; 3],
    velocities: Option<&[Vec<S>; 3]>,
    payload: &[u32],
) -> Signal<S> {
    let mut signal = Signal::new(grid);
    for axis in 0..3 {
        signal
            .add_channel(CHANNEL_POSITION[axis], positions[axis].clone())
            .expect("fresh channel");
        if let Some(velocities) = velocities {
            signal
                .add_channel(CHANNEL_VELOCITY[axis], velocities[axis].clone())
                .expect("fresh channel");
        }
    }
    signal.add_channel(CHANNEL_PAYLOAD, payload_channel(payload)).expect("fresh channel");
    signal
}
