//! Trajectory optimization: penalized smooth-robustness ascent and
//! exact-semantics validation.

mod objective;
mod solve;
mod validate;

pub use objective::{
    objective, DecisionVector, Iterate, ObjectiveContext, Residuals, SolveError,
};
pub use solve::{solve, OuterLogRow, PlanResult, SolverConfig};
pub use validate::{validate, ValidationReport, RESIDUAL_TOLERANCE};
