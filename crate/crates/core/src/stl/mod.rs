//! Temporal logic over discrete-time signals: formula trees, exact
//! robustness, smooth robustness, and gradients.

mod eval;
mod formula;
mod grid;
mod sexpr;
mod signal;

pub use eval::{
    eval_agm, eval_agm_gradient, eval_robust, to_index_window, CompiledFormula, EvalError,
    EvalWorkspace,
};
pub use formula::{Formula, Interval, IntervalError, Predicate};
pub use grid::{GridError, TimeGrid};
pub use sexpr::{parse_sexpr, to_sexpr, SexprError};
pub use signal::{Signal, SignalError};
