//! Robustness evaluation.
//!
//! Two semantics share one evaluation engine: the exact min/max recursion,
//! and a smooth arithmetic-geometric-mean relaxation of every min/max
//! aggregation. The engine is generic over [`Scalar`], so running it on
//! dual numbers yields gradients through the same code path.
//!
//! Smooth conjunction over margins `r_1..r_m`:
//!   all positive: `(prod (1 + r_i))^(1/m) - 1`
//!   otherwise:    `(1/m) * sum of the non-positive r_i`
//! Disjunction is its negation dual. Both preserve the sign of min/max, so
//! a positive smooth value certifies satisfaction.


use crate::scalar::{Dual, Scalar};

use super::{Formula, Interval, Signal, TimeGrid};

/// Evaluation failure.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unknown channel `{0}`")]
    UnknownChannel(String),
    #[error("window [{lower}, {upper}]s at sample {at} lies entirely beyond the horizon")]
    EmptyWindow { lower: f64, upper: f64, at: usize },
    #[error("sample index {index} outside grid of {sample_count} samples")]
    SampleOutOfRange { index: usize, sample_count: usize },
}

/// Maps a relative time window at sample `k` to an inclusive index range,
/// clipped at the horizon end. Fails if the whole window lies beyond it.
pub fn to_index_window(
    interval: &Interval,
    k: usize,
    grid: &TimeGrid,
) -> Result<(usize, usize), EvalError> {
    grid.check_sample(k)?;
    let lo = k + grid.duration_to_samples(interval.lower());
    let hi = k + grid.duration_to_samples(interval.upper());
    let last = grid.last_index();
    if lo > last {
        return Err(EvalError::EmptyWindow { lower: interval.lower(), upper: interval.upper(), at: k });
    }
    Ok((lo, hi.min(last)))
}

/// Exact robustness of `formula` over `signal` at sample `k`.
pub fn eval_robust<T: Scalar>(
    formula: &Formula<T>,
    signal: &Signal<T>,
    k: usize,
) -> Result<T, EvalError> {
    CompiledFormula::compile(formula, signal)?.exact(signal, k)
}

/// Smooth robustness of `formula` over `signal` at sample `k`.
pub fn eval_agm<T: Scalar>(
    formula: &Formula<T>,
    signal: &Signal<T>,
    k: usize,
) -> Result<T, EvalError> {
    CompiledFormula::compile(formula, signal)?.smooth(signal, k)
}

/// Partial derivatives of the smooth robustness with respect to the listed
/// `(channel, sample)` coordinates, by forward accumulation through the
/// evaluation tree.
pub fn eval_agm_gradient<T: Scalar>(
    formula: &Formula<T>,
    signal: &Signal<T>,
    k: usize,
    wrt: &[(&str, usize)],
) -> Result<Vec<T>, EvalError> {
    const LANES: usize = 8;

    let mut coords = Vec::with_capacity(wrt.len());
    for (name, sample) in wrt {
        let channel = signal
            .channel_index(name)
            .ok_or_else(|| EvalError::UnknownChannel(name.to_string()))?;
        signal.grid().check_sample(*sample)?;
        coords.push((channel, *sample));
    }

    let lifted = formula.map_scalar(&|w| Dual::<T, LANES>::constant(w));
    let mut out = vec![T::zero(); coords.len()];
    let mut workspace = EvalWorkspace::new();
    for (chunk_index, chunk) in coords.chunks(LANES).enumerate() {
        let seeded = signal.map(|channel, sample, value| {
            let mut dual = Dual::<T, LANES>::constant(value);
            for (lane, &(c, s)) in chunk.iter().enumerate() {
                if c == channel && s == sample {
                    dual.eps[lane] = dual.eps[lane] + T::one();
                }
            }
            dual
        });
        let compiled = CompiledFormula::compile(&lifted, &seeded)?;
        let value = compiled.smooth_with(&mut workspace, &seeded, k)?;
        for lane in 0..chunk.len() {
            out[chunk_index * LANES + lane] = value.tangent(lane);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct Window {
    lo: usize,
    hi: usize,
    seconds: Interval,
}

#[derive(Debug, Clone)]
enum Node<T> {
    Pred { terms: Vec<(usize, T)>, offset: T },
    Not { child: usize },
    And { children: Vec<usize> },
    Or { children: Vec<usize> },
    Always { window: Window, child: usize },
    Eventually { window: Window, child: usize },
    Next { window: Window, child: usize },
    Until { window: Window, left: usize, right: usize },
}

/// Formula lowered to an evaluation arena: channels resolved to indices,
/// windows precomputed in samples.
#[derive(Debug, Clone)]
pub struct CompiledFormula<T> {
    nodes: Vec<Node<T>>,
    root: usize,
    channel_names: Vec<String>,
    grid: TimeGrid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Cell<T> {
    Unset,
    Undefined,
    Value(T),
}

/// Reusable memoization buffer for repeated evaluations.
///
/// Entries are invalidated in O(1) between runs by bumping a generation
/// stamp instead of clearing the buffer.
#[derive(Debug)]
pub struct EvalWorkspace<T> {
    cells: Vec<(u32, Cell<T>)>,
    stamp: u32,
    samples: usize,
    empty_window: Option<(Interval, usize)>,
}

impl<T: Scalar> EvalWorkspace<T> {
    pub fn new() -> Self {
        Self { cells: Vec::new(), stamp: 0, samples: 0, empty_window: None }
    }

    fn reset(&mut self, nodes: usize, samples: usize) {
        let needed = nodes * samples;
        if self.cells.len() != needed || self.samples != samples || self.stamp == u32::MAX {
            self.samples = samples;
            self.cells.clear();
            self.cells.resize(needed, (0, Cell::Unset));
            self.stamp = 1;
        } else {
            self.stamp += 1;
        }
        self.empty_window = None;
    }

    fn get(&self, node: usize, k: usize) -> Cell<T> {
        let (stamp, cell) = self.cells[node * self.samples + k];
        if stamp == self.stamp {
            cell
        } else {
            Cell::Unset
        }
    }

    fn set(&mut self, node: usize, k: usize, value: Option<T>) {
        let cell = match value {
            Some(v) => Cell::Value(v),
            None => Cell::Undefined,
        };
        self.cells[node * self.samples + k] = (self.stamp, cell);
    }

    fn note_empty(&mut self, window: &Window, at: usize) {
        if self.empty_window.is_none() {
            self.empty_window = Some((window.seconds, at));
        }
    }
}

impl<T: Scalar> Default for EvalWorkspace<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> CompiledFormula<T> {
    /// Lowers `formula`, resolving channel names against `signal`'s layout.
    pub fn compile(formula: &Formula<T>, signal: &Signal<T>) -> Result<Self, EvalError> {
        let mut compiler = Compiler {
            nodes: Vec::with_capacity(formula.node_count()),
            channel_names: Vec::new(),
            signal_layout: signal,
            grid: *signal.grid(),
        };
        let root = compiler.add(formula)?;
        Ok(Self {
            nodes: compiler.nodes,
            root,
            channel_names: compiler.channel_names,
            grid: compiler.grid,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Exact robustness at sample `k`.
    pub fn exact(&self, signal: &Signal<T>, k: usize) -> Result<T, EvalError> {
        self.exact_with(&mut EvalWorkspace::new(), signal, k)
    }

    /// Smooth robustness at sample `k`.
    pub fn smooth(&self, signal: &Signal<T>, k: usize) -> Result<T, EvalError> {
        self.smooth_with(&mut EvalWorkspace::new(), signal, k)
    }

    /// Exact robustness, reusing `workspace` between calls.
    pub fn exact_with(
        &self,
        workspace: &mut EvalWorkspace<T>,
        signal: &Signal<T>,
        k: usize,
    ) -> Result<T, EvalError> {
        self.run::<ExactSemantics>(workspace, signal, k)
    }

    /// Smooth robustness, reusing `workspace` between calls.
    pub fn smooth_with(
        &self,
        workspace: &mut EvalWorkspace<T>,
        signal: &Signal<T>,
        k: usize,
    ) -> Result<T, EvalError> {
        self.run::<AgmSemantics>(workspace, signal, k)
    }

    fn run<S: Semantics<T>>(
        &self,
        workspace: &mut EvalWorkspace<T>,
        signal: &Signal<T>,
        k: usize,
    ) -> Result<T, EvalError> {
        assert_eq!(
            signal.grid(),
            &self.grid,
            "signal grid differs from the grid the formula was compiled for"
        );
        signal.grid().check_sample(k)?;
        let channels: Vec<&[T]> = self
            .channel_names
            .iter()
            .map(|name| {
                signal
                    .channel(name)
                    .ok_or_else(|| EvalError::UnknownChannel(name.clone()))
            })
            .collect::<Result<_, _>>()?;
        workspace.reset(self.nodes.len(), signal.grid().sample_count());
        let mut ctx = EvalCtx {
            nodes: &self.nodes,
            channels,
            last: signal.grid().last_index(),
            workspace,
        };
        match ctx.eval::<S>(self.root, k) {
            Some(value) => Ok(value),
            None => {
                let (seconds, at) = ctx
                    .workspace
                    .empty_window
                    .expect("undefined robustness without an empty window");
                Err(EvalError::EmptyWindow {
                    lower: seconds.lower(),
                    upper: seconds.upper(),
                    at,
                })
            }
        }
    }
}

struct Compiler<'a, T> {
    nodes: Vec<Node<T>>,
    channel_names: Vec<String>,
    signal_layout: &'a Signal<T>,
    grid: TimeGrid,
}

impl<'a, T: Scalar> Compiler<'a, T> {
    fn channel_slot(&mut self, name: &str) -> Result<usize, EvalError> {
        if self.signal_layout.channel_index(name).is_none() {
            return Err(EvalError::UnknownChannel(name.to_string()));
        }
        if let Some(pos) = self.channel_names.iter().position(|n| n == name) {
            return Ok(pos);
        }
        self.channel_names.push(name.to_string());
        Ok(self.channel_names.len() - 1)
    }

    fn window(&self, interval: &Interval) -> Window {
        Window {
            lo: self.grid.duration_to_samples(interval.lower()),
            hi: self.grid.duration_to_samples(interval.upper()),
            seconds: *interval,
        }
    }

    fn add(&mut self, formula: &Formula<T>) -> Result<usize, EvalError> {
        let node = match formula {
            Formula::Pred(pred) => {
                let terms = pred
                    .coefficients()
                    .map(|(name, w)| Ok((self.channel_slot(name)?, w)))
                    .collect::<Result<Vec<_>, EvalError>>()?;
                Node::Pred { terms, offset: pred.offset() }
            }
            Formula::Not(inner) => Node::Not { child: self.add(inner)? },
            Formula::And(children) => {
                assert!(!children.is_empty(), "conjunction needs children");
                Node::And { children: self.add_all(children)? }
            }
            Formula::Or(children) => {
                assert!(!children.is_empty(), "disjunction needs children");
                Node::Or { children: self.add_all(children)? }
            }
            Formula::Always(interval, inner) => {
                Node::Always { window: self.window(interval), child: self.add(inner)? }
            }
            Formula::Eventually(interval, inner) => {
                Node::Eventually { window: self.window(interval), child: self.add(inner)? }
            }
            Formula::Next(interval, inner) => {
                Node::Next { window: self.window(interval), child: self.add(inner)? }
            }
            Formula::Until(interval, left, right) => Node::Until {
                window: self.window(interval),
                left: self.add(left)?,
                right: self.add(right)?,
            },
        };
        self.nodes.push(node);
        Ok(self.nodes.len() - 1)
    }

    fn add_all(&mut self, children: &[Formula<T>]) -> Result<Vec<usize>, EvalError> {
        children.iter().map(|c| self.add(c)).collect()
    }
}

struct EvalCtx<'a, T: Scalar> {
    nodes: &'a [Node<T>],
    channels: Vec<&'a [T]>,
    last: usize,
    workspace: &'a mut EvalWorkspace<T>,
}

impl<'a, T: Scalar> EvalCtx<'a, T> {
    /// Index window of `window` anchored at `k`, or `None` when it lies
    /// entirely beyond the horizon.
    fn window_at(&self, window: &Window, k: usize) -> Option<(usize, usize)> {
        let lo = k + window.lo;
        if lo > self.last {
            return None;
        }
        Some((lo, (k + window.hi).min(self.last)))
    }

    fn eval<S: Semantics<T>>(&mut self, node: usize, k: usize) -> Option<T> {
        match self.workspace.get(node, k) {
            Cell::Value(v) => return Some(v),
            Cell::Undefined => return None,
            Cell::Unset => {}
        }
        let result = self.compute::<S>(node, k);
        self.workspace.set(node, k, result);
        result
    }

    fn compute<S: Semantics<T>>(&mut self, node: usize, k: usize) -> Option<T> {
        let nodes = self.nodes;
        match &nodes[node] {
            Node::Pred { terms, offset } => {
                let mut value = *offset;
                for &(channel, weight) in terms {
                    value = value + weight * self.channels[channel][k];
                }
                Some(value)
            }
            Node::Not { child } => self.eval::<S>(*child, k).map(|v| -v),
            Node::And { children } => {
                let mut agg = S::Conj::empty();
                for &child in children {
                    agg.push(self.eval::<S>(child, k)?);
                }
                Some(agg.finish())
            }
            Node::Or { children } => {
                let mut agg = S::Disj::empty();
                for &child in children {
                    agg.push(self.eval::<S>(child, k)?);
                }
                Some(agg.finish())
            }
            Node::Always { window, child } => {
                let Some((lo, hi)) = self.window_at(window, k) else {
                    self.workspace.note_empty(window, k);
                    return None;
                };
                let mut agg = S::Conj::empty();
                for t in lo..=hi {
                    agg.push(self.eval::<S>(*child, t)?);
                }
                Some(agg.finish())
            }
            Node::Eventually { window, child } => {
                let Some((lo, hi)) = self.window_at(window, k) else {
                    self.workspace.note_empty(window, k);
                    return None;
                };
                let mut agg = S::Disj::empty();
                for t in lo..=hi {
                    agg.push(self.eval::<S>(*child, t)?);
                }
                Some(agg.finish())
            }
            Node::Next { window, child } => {
                // The single evaluation point is the first window sample.
                let Some((lo, _)) = self.window_at(window, k) else {
                    self.workspace.note_empty(window, k);
                    return None;
                };
                self.eval::<S>(*child, lo)
            }
            Node::Until { window, left, right } => {
                let Some((lo, hi)) = self.window_at(window, k) else {
                    self.workspace.note_empty(window, k);
                    return None;
                };
                let mut outer = S::Disj::empty();
                let mut left_acc = S::Conj::empty();
                for t in k..=hi {
                    left_acc.push(self.eval::<S>(*left, t)?);
                    if t >= lo {
                        let mut inner = left_acc.clone();
                        inner.push(self.eval::<S>(*right, t)?);
                        outer.push(inner.finish());
                    }
                }
                Some(outer.finish())
            }
        }
    }
}

/// Incremental aggregation over child robustness values.
trait Aggregate<T: Scalar>: Clone {
    fn empty() -> Self;
    fn push(&mut self, value: T);
    fn finish(&self) -> T;
}

trait Semantics<T: Scalar> {
    type Conj: Aggregate<T>;
    type Disj: Aggregate<T>;
}

struct ExactSemantics;
struct AgmSemantics;

impl<T: Scalar> Semantics<T> for ExactSemantics {
    type Conj = MinAgg<T>;
    type Disj = MaxAgg<T>;
}

impl<T: Scalar> Semantics<T> for AgmSemantics {
    type Conj = AgmAnd<T>;
    type Disj = AgmOr<T>;
}

#[derive(Clone)]
struct MinAgg<T>(Option<T>);

impl<T: Scalar> Aggregate<T> for MinAgg<T> {
    fn empty() -> Self {
        Self(None)
    }
    fn push(&mut self, value: T) {
        self.0 = Some(match self.0 {
            None => value,
            Some(acc) => {
                if value < acc {
                    value
                } else {
                    acc
                }
            }
        });
    }
    fn finish(&self) -> T {
        self.0.expect("aggregation over an empty set")
    }
}

#[derive(Clone)]
struct MaxAgg<T>(Option<T>);

impl<T: Scalar> Aggregate<T> for MaxAgg<T> {
    fn empty() -> Self {
        Self(None)
    }
    fn push(&mut self, value: T) {
        self.0 = Some(match self.0 {
            None => value,
            Some(acc) => {
                if value > acc {
                    value
                } else {
                    acc
                }
            }
        });
    }
    fn finish(&self) -> T {
        self.0.expect("aggregation over an empty set")
    }
}

/// Smooth conjunction. The geometric branch accumulates `ln(1 + r)` so the
/// running product cannot overflow on wide windows.
#[derive(Clone)]
struct AgmAnd<T> {
    count: usize,
    all_positive: bool,
    log_sum: T,
    nonpos_sum: T,
}

impl<T: Scalar> Aggregate<T> for AgmAnd<T> {
    fn empty() -> Self {
        Self { count: 0, all_positive: true, log_sum: T::zero(), nonpos_sum: T::zero() }
    }
    fn push(&mut self, value: T) {
        self.count += 1;
        if value > T::zero() {
            self.log_sum = self.log_sum + value.ln_1p();
        } else {
            self.all_positive = false;
            self.nonpos_sum = self.nonpos_sum + value;
        }
    }
    fn finish(&self) -> T {
        assert!(self.count > 0, "aggregation over an empty set");
        let m = T::of(self.count as f64);
        if self.all_positive {
            (self.log_sum / m).exp_m1()
        } else {
            self.nonpos_sum / m
        }
    }
}

/// Smooth disjunction as the negation dual of [`AgmAnd`].
#[derive(Clone)]
struct AgmOr<T> {
    inner: AgmAnd<T>,
}

impl<T: Scalar> Aggregate<T> for AgmOr<T> {
    fn empty() -> Self {
        Self { inner: AgmAnd::empty() }
    }
    fn push(&mut self, value: T) {
        self.inner.push(-value);
    }
    fn finish(&self) -> T {
        -self.inner.finish()
    }
}
