//! Formula syntax tree over affine predicates.

use std::collections::BTreeMap;

use crate::scalar::Scalar;

/// Closed time window `[lower, upper]` in seconds, `0 <= lower <= upper`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lower: f64,
    upper: f64,
}

/// Invalid interval bounds.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("interval bounds must satisfy 0 <= lower <= upper, got [{lower}, {upper}]")]
pub struct IntervalError {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self, IntervalError> {
        if lower >= 0.0 && lower <= upper {
            Ok(Self { lower, upper })
        } else {
            Err(IntervalError { lower, upper })
        }
    }

    /// Degenerate window `[at, at]`.
    pub fn at(at: f64) -> Result<Self, IntervalError> {
        Self::new(at, at)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }
}

/// Affine predicate `sum_c w_c · channel_c[k] + offset`, satisfied when
/// the value is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate<T> {
    coefficients: BTreeMap<String, T>,
    offset: T,
}

impl<T: Scalar> Predicate<T> {
    /// Constant predicate with no channel terms.
    pub fn constant(offset: T) -> Self {
        Self { coefficients: BTreeMap::new(), offset }
    }

    /// Single-channel predicate `weight · channel + offset`.
    pub fn affine(channel: impl Into<String>, weight: T, offset: T) -> Self {
        Self::constant(offset).plus_term(channel, weight)
    }

    /// Adds a weighted channel term. Repeated channels accumulate.
    pub fn plus_term(mut self, channel: impl Into<String>, weight: T) -> Self {
        let entry = self.coefficients.entry(channel.into()).or_insert_with(T::zero);
        *entry = *entry + weight;
        self
    }

    /// Adds to the constant offset.
    pub fn plus_offset(mut self, value: T) -> Self {
        self.offset = self.offset + value;
        self
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&str, T)> {
        self.coefficients.iter().map(|(name, &w)| (name.as_str(), w))
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn map_scalar<U: Scalar>(&self, f: &impl Fn(T) -> U) -> Predicate<U> {
        Predicate {
            coefficients: self
                .coefficients
                .iter()
                .map(|(name, &w)| (name.clone(), f(w)))
                .collect(),
            offset: f(self.offset),
        }
    }
}

/// Formula tree. Temporal operators carry a relative time window.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula<T> {
    Pred(Predicate<T>),
    Not(Box<Formula<T>>),
    And(Vec<Formula<T>>),
    Or(Vec<Formula<T>>),
    Always(Interval, Box<Formula<T>>),
    Eventually(Interval, Box<Formula<T>>),
    Next(Interval, Box<Formula<T>>),
    Until(Interval, Box<Formula<T>>, Box<Formula<T>>),
}

impl<T: Scalar> Formula<T> {
    pub fn pred(predicate: Predicate<T>) -> Self {
        Formula::Pred(predicate)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(inner: Formula<T>) -> Self {
        Formula::Not(Box::new(inner))
    }

    /// Conjunction. A single child collapses to itself.
    ///
    /// # Panics
    /// Panics on an empty child list.
    pub fn and(children: Vec<Formula<T>>) -> Self {
        assert!(!children.is_empty(), "conjunction needs at least one child");
        if children.len() == 1 {
            children.into_iter().next().unwrap()
        } else {
            Formula::And(children)
        }
    }

    /// Disjunction. A single child collapses to itself.
    ///
    /// # Panics
    /// Panics on an empty child list.
    pub fn or(children: Vec<Formula<T>>) -> Self {
        assert!(!children.is_empty(), "disjunction needs at least one child");
        if children.len() == 1 {
            children.into_iter().next().unwrap()
        } else {
            Formula::Or(children)
        }
    }

    pub fn always(window: Interval, inner: Formula<T>) -> Self {
        Formula::Always(window, Box::new(inner))
    }

    pub fn eventually(window: Interval, inner: Formula<T>) -> Self {
        Formula::Eventually(window, Box::new(inner))
    }

    pub fn next(window: Interval, inner: Formula<T>) -> Self {
        Formula::Next(window, Box::new(inner))
    }

    pub fn until(window: Interval, left: Formula<T>, right: Formula<T>) -> Self {
        Formula::Until(window, Box::new(left), Box::new(right))
    }

    /// Number of nodes in the tree.
    pub fn node_count(&self) -> usize {
        match self {
            Formula::Pred(_) => 1,
            Formula::Not(inner)
            | Formula::Always(_, inner)
            | Formula::Eventually(_, inner)
            | Formula::Next(_, inner) => 1 + inner.node_count(),
            Formula::And(children) | Formula::Or(children) => {
                1 + children.iter().map(Formula::node_count).sum::<usize>()
            }
            Formula::Until(_, left, right) => 1 + left.node_count() + right.node_count(),
        }
    }

    /// Converts every coefficient through `f`, e.g. lifting `f64` formulas
    /// into dual-number formulas for gradient evaluation.
    pub fn map_scalar<U: Scalar>(&self, f: &impl Fn(T) -> U) -> Formula<U> {
        match self {
            Formula::Pred(p) => Formula::Pred(p.map_scalar(f)),
            Formula::Not(inner) => Formula::not(inner.map_scalar(f)),
            Formula::And(children) => {
                Formula::And(children.iter().map(|c| c.map_scalar(f)).collect())
            }
            Formula::Or(children) => {
                Formula::Or(children.iter().map(|c| c.map_scalar(f)).collect())
            }
            Formula::Always(w, inner) => Formula::always(*w, inner.map_scalar(f)),
            Formula::Eventually(w, inner) => Formula::eventually(*w, inner.map_scalar(f)),
            Formula::Next(w, inner) => Formula::next(*w, inner.map_scalar(f)),
            Formula::Until(w, left, right) => {
                Formula::until(*w, left.map_scalar(f), right.map_scalar(f))
            }
        }
    }
}
