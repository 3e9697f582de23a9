//! Visit-order routing: graph construction, the capacitated integer
//! program, route extraction, and warm-start synthesis.

mod ilp;
mod simplex;
mod warm;

pub use ilp::{
    extract_route, solve_ilp, verify_solution, Edge, IlpSolution, RouteError, RouteGraph,
    RoutePlan, Visit, DEPOT_VERTEX,
};
pub use warm::{warm_start, WarmStart};

use crate::mission::Scenario;

/// Routing graph over the scenario's depot, operators, and stations.
pub fn build_graph(scenario: &Scenario) -> Result<RouteGraph, RouteError> {
    RouteGraph::from_scenario(scenario)
}
