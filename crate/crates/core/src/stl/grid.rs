//! Uniform sampling grid for discrete-time signals.

use serde::{Deserialize, Serialize};

use super::EvalError;

/// Uniform time grid: `sample_count` states spaced `sampling_period` apart.
///
/// A grid with `sample_count = N + 1` covers the horizon `N · sampling_period`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    sampling_period: f64,
    sample_count: usize,
}

/// Grid construction failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("sampling period must be positive, got {0}")]
    NonPositivePeriod(f64),
    #[error("grid needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

impl TimeGrid {
    pub fn new(sampling_period: f64, sample_count: usize) -> Result<Self, GridError> {
        if sampling_period.is_nan() || sampling_period <= 0.0 {
            return Err(GridError::NonPositivePeriod(sampling_period));
        }
        if sample_count < 2 {
            return Err(GridError::TooFewSamples(sample_count));
        }
        Ok(Self { sampling_period, sample_count })
    }

    /// Grid spanning `horizon` seconds with the given period; the step count
    /// is rounded to the nearest integer.
    pub fn from_horizon(sampling_period: f64, horizon: f64) -> Result<Self, GridError> {
        if sampling_period.is_nan() || sampling_period <= 0.0 {
            return Err(GridError::NonPositivePeriod(sampling_period));
        }
        let steps = (horizon / sampling_period).round() as usize;
        Self::new(sampling_period, steps + 1)
    }

    pub fn sampling_period(&self) -> f64 {
        self.sampling_period
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Number of integration steps (one less than the sample count).
    pub fn step_count(&self) -> usize {
        self.sample_count - 1
    }

    /// Index of the final sample.
    pub fn last_index(&self) -> usize {
        self.sample_count - 1
    }

    /// Total horizon in seconds.
    pub fn horizon(&self) -> f64 {
        self.sampling_period * self.step_count() as f64
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.sampling_period * index as f64
    }

    /// Converts a non-negative duration to a whole number of samples,
    /// rounding to nearest with ties toward the lower index.
    pub fn duration_to_samples(&self, seconds: f64) -> usize {
        let exact = seconds / self.sampling_period;
        (exact - 0.5).ceil().max(0.0) as usize
    }

    pub(crate) fn check_sample(&self, index: usize) -> Result<(), EvalError> {
        if index >= self.sample_count {
            Err(EvalError::SampleOutOfRange { index, sample_count: self.sample_count })
        } else {
            Ok(())
        }
    }
}
