//! Warm-start trajectory synthesis.
//!
//! Concatenates rest-to-rest segments along the route plan's waypoints with
//! zero-motion holds at every operator and refill stop, then pads the
//! remainder of the grid with a terminal hold at the final station.

use crate::dynamics::{rest_to_rest, AxisState, Trajectory};
use crate::mission::Scenario;

use super::ilp::{RoutePlan, Visit};

/// Warm-start trajectory plus a flag when the plan did not fit the horizon
/// (the returned trajectory is then truncated at the horizon end).
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub trajectory: Trajectory,
    pub horizon_exceeded: bool,
}

pub fn warm_start(plan: &RoutePlan, scenario: &Scenario) -> WarmStart {
    let grid = scenario.grid;
    let dt = grid.sampling_period();
    let handover_hold = grid.duration_to_samples(scenario.handover_time);
    let refill_hold = grid.duration_to_samples(scenario.refill_time);

    let mut accels: [Vec<f64>; 3] = Default::default();
    let mut at = scenario.depot;
    for visit in &plan.visits {
        let (target, hold_steps) = match visit {
            Visit::DepotStart => continue,
            Visit::Operator(i) => {
                (scenario.operators[*i].handover_box.center(), handover_hold)
            }
            Visit::Refill(i) | Visit::FinalRefill(i) => {
                (scenario.refill_stations[*i].center(), refill_hold)
            }
        };
        let segment = rest_to_rest(at, target, &scenario.limits, dt);
        for axis in 0..3 {
            accels[axis].extend_from_slice(segment.accelerations(axis));
            accels[axis].extend(std::iter::repeat_n(0.0, hold_steps));
        }
        at = target;
    }

    let steps = grid.step_count();
    let horizon_exceeded = accels[0].len() > steps;
    for axis in accels.iter_mut() {
        axis.resize(steps, 0.0);
    }
    let initial = std::array::from_fn(|axis| AxisState::at_rest(scenario.depot[axis]));
    let trajectory = Trajectory::from_rollout(grid, initial, accels)
        .expect("acceleration sequences were sized to the grid");
    WarmStart { trajectory, horizon_exceeded }
}
