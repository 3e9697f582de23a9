//! Energy-aware temporal-logic motion planning for a multirotor tool
//! carrier.
//!
//! The pipeline turns a declarative handover mission (workspace, obstacles,
//! operators with approach preferences, refill stations) into a temporal
//! logic formula, computes a distance-optimal visit order by integer
//! programming, synthesizes a dynamically feasible warm-start trajectory
//! from rest-to-rest primitives, and then maximizes smooth robustness minus
//! an energy penalty over acceleration and slack sequences.
//!
//! Numeric kernels are generic over the scalar type ([`scalar::Scalar`]);
//! instantiating them with [`scalar::Dual`] yields forward-mode gradients.
//! The concrete aliases below fix `f64`, which is what the planner uses.

pub mod dynamics;
pub mod mission;
pub mod opt;
pub mod route;
pub mod scalar;
pub mod stl;

/// `f64` formula tree.
pub type Formula64 = stl::Formula<f64>;
/// `f64` affine predicate.
pub type Predicate64 = stl::Predicate<f64>;
/// `f64` multi-channel signal.
pub type Signal64 = stl::Signal<f64>;
/// Dual number over `f64` with `L` tangent lanes.
pub type Dual64<const L: usize> = scalar::Dual<f64, L>;
