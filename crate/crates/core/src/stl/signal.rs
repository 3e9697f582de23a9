//! Multi-channel discrete-time signals.

use std::collections::BTreeMap;

use crate::scalar::Scalar;

use super::TimeGrid;

/// Named real-valued channels sampled on a shared [`TimeGrid`].
#[derive(Debug, Clone)]
pub struct Signal<T> {
    grid: TimeGrid,
    channels: Vec<(String, Vec<T>)>,
    index: BTreeMap<String, usize>,
}

/// Signal construction failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SignalError {
    #[error("channel `{name}` has {got} samples, grid expects {expected}")]
    LengthMismatch { name: String, got: usize, expected: usize },
    #[error("duplicate channel `{0}`")]
    DuplicateChannel(String),
}

impl<T: Scalar> Signal<T> {
    pub fn new(grid: TimeGrid) -> Self {
        Self { grid, channels: Vec::new(), index: BTreeMap::new() }
    }

    pub fn with_channel(
        mut self,
        name: impl Into<String>,
        values: Vec<T>,
    ) -> Result<Self, SignalError> {
        self.add_channel(name, values)?;
        Ok(self)
    }

    pub fn add_channel(
        &mut self,
        name: impl Into<String>,
        values: Vec<T>,
    ) -> Result<(), SignalError> {
        let name = name.into();
        if values.len() != self.grid.sample_count() {
            return Err(SignalError::LengthMismatch {
                name,
                got: values.len(),
                expected: self.grid.sample_count(),
            });
        }
        if self.index.contains_key(&name) {
            return Err(SignalError::DuplicateChannel(name));
        }
        self.index.insert(name.clone(), self.channels.len());
        self.channels.push((name, values));
        Ok(())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn channel(&self, name: &str) -> Option<&[T]> {
        self.index.get(name).map(|&i| self.channels[i].1.as_slice())
    }

    pub fn channel_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|(name, _)| name.as_str())
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    /// Maps every sample through `f`, keeping names and layout. The mapper
    /// receives `(channel index, sample index, value)`, which is how gradient
    /// seeds are planted.
    pub fn map<U: Scalar>(&self, mut f: impl FnMut(usize, usize, T) -> U) -> Signal<U> {
        Signal {
            grid: self.grid,
            channels: self
                .channels
                .iter()
                .enumerate()
                .map(|(ci, (name, values))| {
                    (
                        name.clone(),
                        values.iter().enumerate().map(|(k, &v)| f(ci, k, v)).collect(),
                    )
                })
                .collect(),
            index: self.index.clone(),
        }
    }
}
