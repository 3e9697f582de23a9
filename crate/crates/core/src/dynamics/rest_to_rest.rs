//! Rest-to-rest segment synthesis.
//!
//! Each axis gets a symmetric ramp/cruise/ramp acceleration profile built
//! directly on the sampling grid: `m` steps at `+a`, a cruise, and `m` steps
//! at `-a`. With `n` total steps the displacement is exactly
//! `a · dt² · m · (n − m)`, so solving for `a` lands on the target to
//! machine precision. All axes share one duration (the slowest axis's
//! minimum, rounded up to whole samples); faster axes run at reduced
//! acceleration.

use super::{rollout_axis, AxisState, MotionLimits};

const ZERO_DISPLACEMENT: f64 = 1e-12;

/// Fixed-step acceleration profile starting and ending at rest.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionSegment {
    start: [f64; 3],
    dt: f64,
    accelerations: [Vec<f64>; 3],
}

impl MotionSegment {
    /// Hold segment: `steps` zero-acceleration samples at `point`.
    pub fn hold(point: [f64; 3], steps: usize, dt: f64) -> Self {
        Self {
            start: point,
            dt,
            accelerations: std::array::from_fn(|_| vec![0.0; steps]),
        }
    }

    pub fn start(&self) -> [f64; 3] {
        self.start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_count(&self) -> usize {
        self.accelerations[0].len()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.step_count() as f64
    }

    pub fn accelerations(&self, axis: usize) -> &[f64] {
        &self.accelerations[axis]
    }

    /// Sampled positions and velocities of the segment.
    pub fn rollout(&self) -> ([Vec<f64>; 3], [Vec<f64>; 3]) {
        let mut positions: [Vec<f64>; 3] = Default::default();
        let mut velocities: [Vec<f64>; 3] = Default::default();
        for axis in 0..3 {
            let (p, v) = rollout_axis(
                AxisState::at_rest(self.start[axis]),
                &self.accelerations[axis],
                self.dt,
            );
            positions[axis] = p;
            velocities[axis] = v;
        }
        (positions, velocities)
    }

    pub fn end_position(&self) -> [f64; 3] {
        let (positions, _) = self.rollout();
        std::array::from_fn(|axis| *positions[axis].last().unwrap())
    }
}

/// Zero-velocity-to-zero-velocity segment from `from` to `to`, sampled every
/// `dt` seconds, with all axes arriving simultaneously.
///
/// Zero displacement yields a single-state segment of duration zero.
///
/// # Panics
/// Panics when `dt` is not strictly positive or limits are not positive.
pub fn rest_to_rest(from: [f64; 3], to: [f64; 3], limits: &MotionLimits, dt: f64) -> MotionSegment {
    assert!(dt > 0.0, "rest_to_rest requires dt > 0");
    assert!(
        limits.max_velocity > 0.0 && limits.max_acceleration > 0.0,
        "rest_to_rest requires positive limits"
    );
    let displacement: [f64; 3] = std::array::from_fn(|axis| to[axis] - from[axis]);
    let steps = displacement
        .iter()
        .map(|&d| axis_min_steps(d.abs(), limits, dt))
        .max()
        .unwrap();
    if steps == 0 {
        return MotionSegment::hold(from, 0, dt);
    }
    let accelerations = std::array::from_fn(|axis| {
        let d = displacement[axis];
        let (ramp, accel) = axis_profile(d.abs(), steps, limits, dt)
            .expect("profile exists at or above the per-axis minimum duration");
        build_profile(steps, ramp, accel.copysign(d))
    });
    MotionSegment { start: from, dt, accelerations }
}

/// Smallest whole number of steps in which the axis can cover `distance`.
fn axis_min_steps(distance: f64, limits: &MotionLimits, dt: f64) -> usize {
    if distance < ZERO_DISPLACEMENT {
        return 0;
    }
    let v = limits.max_velocity;
    let a = limits.max_acceleration;
    let continuous = if distance <= v * v / a {
        2.0 * (distance / a).sqrt()
    } else {
        distance / v + v / a
    };
    let mut steps = ((continuous / dt) - 1e-9).ceil().max(2.0) as usize;
    while axis_profile(distance, steps, limits, dt).is_none() {
        steps += 1;
    }
    steps
}

/// Ramp length and acceleration magnitude covering `distance` in exactly
/// `steps` steps, or `None` when no in-limit profile fits.
fn axis_profile(
    distance: f64,
    steps: usize,
    limits: &MotionLimits,
    dt: f64,
) -> Option<(usize, f64)> {
    if distance < ZERO_DISPLACEMENT {
        return Some((0, 0.0));
    }
    let mut ramp = steps / 2;
    while ramp >= 1 {
        let peak_velocity = distance / (dt * (steps - ramp) as f64);
        if peak_velocity > limits.max_velocity * (1.0 + 1e-12) {
            ramp -= 1;
            continue;
        }
        let accel = distance / (dt * dt * (ramp * (steps - ramp)) as f64);
        if accel > limits.max_acceleration * (1.0 + 1e-12) {
            return None;
        }
        return Some((ramp, accel));
    }
    None
}

fn build_profile(steps: usize, ramp: usize, accel: f64) -> Vec<f64> {
    let mut profile = vec![0.0; steps];
    for value in profile.iter_mut().take(ramp) {
        *value = accel;
    }
    for value in profile.iter_mut().skip(steps - ramp) {
        *value = -accel;
    }
    profile
}
