//! Visit-order integer program.
//!
//! Vertices are the depot, operator handover-box centers, and refill-box
//! centers; edge weights are Euclidean distances. Integer edge
//! multiplicities select how often each edge is flown: depot-operator and
//! operator-operator edges at most once, refill-operator edges up to twice
//! (out and back). Constraints: every operator has degree two, the depot
//! leaves exactly once toward an operator, and for every operator subset S
//! the multiplicity crossing the boundary of S is at least
//! `2 * ceil(|S| / capacity)` (rounded-capacity cuts; for the full operator
//! set this is exactly the edges toward depot and stations). The subset
//! family is enforced lazily inside a best-first branch-and-bound over LP
//! relaxations.

use std::collections::BinaryHeap;

use super::simplex::{solve_lp, LpOutcome, LpProblem, LpRow, Sense};
use crate::mission::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum RouteError {
    #[error("routing needs at least one operator and one refill station")]
    EmptyScenario,
    #[error("no feasible visit order exists")]
    Infeasible,
    #[error("solution multigraph admits no depot-rooted walk: {0}")]
    MalformedSolution(String),
}

/// Undirected edge with an integer multiplicity domain `0..=max_multiplicity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
    pub max_multiplicity: u32,
}

/// Routing graph over depot, operators, and refill stations.
#[derive(Debug, Clone)]
pub struct RouteGraph {
    positions: Vec<[f64; 3]>,
    operator_count: usize,
    refill_count: usize,
    edges: Vec<Edge>,
    incident: Vec<Vec<usize>>,
}

pub const DEPOT_VERTEX: usize = 0;

impl RouteGraph {
    /// Builds the graph from explicit points.
    pub fn from_points(
        depot: [f64; 3],
        operators: &[[f64; 3]],
        refills: &[[f64; 3]],
    ) -> Result<Self, RouteError> {
        if operators.is_empty() || refills.is_empty() {
            return Err(RouteError::EmptyScenario);
        }
        let mut positions = vec![depot];
        positions.extend_from_slice(operators);
        positions.extend_from_slice(refills);
        let operator_count = operators.len();
        let refill_count = refills.len();
        let vertex_count = positions.len();

        let is_operator = |v: usize| v >= 1 && v <= operator_count;
        let is_refill = |v: usize| v > operator_count;
        let mut edges = Vec::new();
        for a in 0..vertex_count {
            for b in (a + 1)..vertex_count {
                let max_multiplicity = if is_operator(a) && is_refill(b) {
                    2
                } else if is_operator(b) && (a == DEPOT_VERTEX || is_operator(a)) {
                    1
                } else {
                    continue;
                };
                let weight = distance(positions[a], positions[b]);
                edges.push(Edge { a, b, weight, max_multiplicity });
            }
        }
        let mut incident = vec![Vec::new(); vertex_count];
        for (index, edge) in edges.iter().enumerate() {
            incident[edge.a].push(index);
            incident[edge.b].push(index);
        }
        Ok(Self { positions, operator_count, refill_count, edges, incident })
    }

    /// Depot point, operator handover-box centers, refill-box centers.
    pub fn from_scenario(scenario: &Scenario) -> Result<Self, RouteError> {
        let operators: Vec<[f64; 3]> =
            scenario.operators.iter().map(|op| op.handover_box.center()).collect();
        let refills: Vec<[f64; 3]> =
            scenario.refill_stations.iter().map(|b| b.center()).collect();
        Self::from_points(scenario.depot, &operators, &refills)
    }

    pub fn operator_count(&self) -> usize {
        self.operator_count
    }

    pub fn refill_count(&self) -> usize {
        self.refill_count
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn position(&self, vertex: usize) -> [f64; 3] {
        self.positions[vertex]
    }

    pub fn is_operator(&self, vertex: usize) -> bool {
        (1..=self.operator_count).contains(&vertex)
    }

    pub fn is_refill(&self, vertex: usize) -> bool {
        vertex > self.operator_count && vertex < self.positions.len()
    }

    pub fn operator_vertex(&self, index: usize) -> usize {
        1 + index
    }

    pub fn refill_vertex(&self, index: usize) -> usize {
        1 + self.operator_count + index
    }

    /// Operator list index of an operator vertex.
    pub fn operator_index(&self, vertex: usize) -> usize {
        vertex - 1
    }

    /// Refill list index of a refill vertex.
    pub fn refill_index(&self, vertex: usize) -> usize {
        vertex - 1 - self.operator_count
    }

    pub fn incident_edges(&self, vertex: usize) -> &[usize] {
        &self.incident[vertex]
    }

    /// Whether the edge crosses the boundary of the operator subset `mask`
    /// (bitmask over operator indices): exactly one endpoint is an operator
    /// inside the subset.
    fn crosses_subset(&self, edge: &Edge, mask: u32) -> bool {
        let in_mask = |v: usize| {
            self.is_operator(v) && (mask >> self.operator_index(v)) & 1 == 1
        };
        in_mask(edge.a) != in_mask(edge.b)
    }
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    (0..3).map(|j| (a[j] - b[j]).powi(2)).sum::<f64>().sqrt()
}

/// Integral edge multiplicities and their total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct IlpSolution {
    pub multiplicities: Vec<u32>,
    pub objective: f64,
}

/// Checks degree, depot, domain, and every operator-subset capacity cut.
pub fn verify_solution(graph: &RouteGraph, capacity: u32, multiplicities: &[u32]) -> bool {
    if multiplicities.len() != graph.edges().len() {
        return false;
    }
    for (edge, &z) in graph.edges().iter().zip(multiplicities) {
        if z > edge.max_multiplicity {
            return false;
        }
    }
    for op in 0..graph.operator_count() {
        let v = graph.operator_vertex(op);
        let degree: u32 =
            graph.incident_edges(v).iter().map(|&e| multiplicities[e]).sum();
        if degree != 2 {
            return false;
        }
    }
    let depot_degree: u32 =
        graph.incident_edges(DEPOT_VERTEX).iter().map(|&e| multiplicities[e]).sum();
    if depot_degree != 1 {
        return false;
    }
    let subsets = (1u32 << graph.operator_count()) - 1;
    for mask in 1..=subsets {
        let lhs: u32 = graph
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, edge)| graph.crosses_subset(edge, mask))
            .map(|(e, _)| multiplicities[e])
            .sum();
        if lhs < subset_requirement(mask, capacity) {
            return false;
        }
    }
    true
}

fn subset_requirement(mask: u32, capacity: u32) -> u32 {
    let size = mask.count_ones();
    2 * size.div_ceil(capacity)
}

#[derive(Debug, Clone, Copy)]
struct Cut {
    mask: u32,
    rhs: f64,
}

struct Node {
    bound: f64,
    seq: u64,
    lower: Vec<u32>,
    upper: Vec<u32>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.seq == other.seq
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap; order so the smallest bound pops first,
    // ties broken by insertion order.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other.bound.total_cmp(&self.bound).then(other.seq.cmp(&self.seq))
    }
}

const INT_TOL: f64 = 1e-6;

/// Solves the visit-order program to optimality.
pub fn solve_ilp(graph: &RouteGraph, capacity: u32) -> Result<IlpSolution, RouteError> {
    if graph.operator_count() == 0 || graph.refill_count() == 0 {
        return Err(RouteError::EmptyScenario);
    }
    assert!(capacity >= 1, "capacity must be at least 1");
    assert!(graph.operator_count() <= 16, "subset separation enumerates operator subsets");

    let edges = graph.edges();
    let mut cuts: Vec<Cut> = Vec::new();
    let mut incumbent: Option<(Vec<u32>, f64)> = None;
    let mut heap = BinaryHeap::new();
    let mut seq: u64 = 0;
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        seq,
        lower: vec![0; edges.len()],
        upper: edges.iter().map(|e| e.max_multiplicity).collect(),
    });

    while let Some(node) = heap.pop() {
        if let Some((_, best)) = &incumbent {
            if node.bound >= best - 1e-9 {
                continue;
            }
        }
        // Re-solve the node until no pooled-family cut is violated.
        let (x, objective) = loop {
            let lp = build_relaxation(graph, &cuts, &node);
            match solve_lp(&lp) {
                LpOutcome::Infeasible => break (None, 0.0),
                LpOutcome::Unbounded => {
                    unreachable!("box-bounded relaxation cannot be unbounded")
                }
                LpOutcome::Optimal { x, objective } => {
                    if let Some((_, best)) = &incumbent {
                        if objective >= best - 1e-9 {
                            break (None, 0.0);
                        }
                    }
                    match most_violated_cut(graph, capacity, &x) {
                        Some(cut) => {
                            debug_assert!(
                                cuts.iter().all(|c| c.mask != cut.mask),
                                "separated a cut already in the pool"
                            );
                            cuts.push(cut);
                        }
                        None => break (Some(x), objective),
                    }
                }
            }
        };
        let Some(x) = x else { continue };

        match rounded_if_integral(&x) {
            Some(z) => {
                let better = match &incumbent {
                    None => true,
                    Some((_, best)) => objective < best - 1e-9,
                };
                if better {
                    incumbent = Some((z, objective));
                }
            }
            None => {
                let branch_edge = most_fractional(&x);
                let value = x[branch_edge];
                let mut down = Node {
                    bound: objective,
                    seq: { seq += 1; seq },
                    lower: node.lower.clone(),
                    upper: node.upper.clone(),
                };
                down.upper[branch_edge] = value.floor().max(0.0) as u32;
                let mut up = Node {
                    bound: objective,
                    seq: { seq += 1; seq },
                    lower: node.lower,
                    upper: node.upper,
                };
                up.lower[branch_edge] = value.ceil() as u32;
                if down.lower[branch_edge] <= down.upper[branch_edge] {
                    heap.push(down);
                }
                if up.lower[branch_edge] <= up.upper[branch_edge] {
                    heap.push(up);
                }
            }
        }
    }

    match incumbent {
        Some((multiplicities, _)) => {
            debug_assert!(verify_solution(graph, capacity, &multiplicities));
            let objective = edges
                .iter()
                .zip(&multiplicities)
                .map(|(e, &z)| e.weight * z as f64)
                .sum();
            Ok(IlpSolution { multiplicities, objective })
        }
        None => Err(RouteError::Infeasible),
    }
}

fn build_relaxation(graph: &RouteGraph, cuts: &[Cut], node: &Node) -> LpProblem {
    let edges = graph.edges();
    let n = edges.len();
    let mut rows = Vec::new();

    for op in 0..graph.operator_count() {
        let vertex = graph.operator_vertex(op);
        let mut coeffs = vec![0.0; n];
        for &e in graph.incident_edges(vertex) {
            coeffs[e] = 1.0;
        }
        rows.push(LpRow { coeffs, sense: Sense::Eq, rhs: 2.0 });
    }
    let mut depot = vec![0.0; n];
    for &e in graph.incident_edges(DEPOT_VERTEX) {
        depot[e] = 1.0;
    }
    rows.push(LpRow { coeffs: depot, sense: Sense::Eq, rhs: 1.0 });

    for cut in cuts {
        let mut coeffs = vec![0.0; n];
        for (e, edge) in edges.iter().enumerate() {
            if graph.crosses_subset(edge, cut.mask) {
                coeffs[e] = 1.0;
            }
        }
        rows.push(LpRow { coeffs, sense: Sense::Ge, rhs: cut.rhs });
    }

    for e in 0..n {
        let upper = node.upper[e].min(edges[e].max_multiplicity);
        let mut coeffs = vec![0.0; n];
        coeffs[e] = 1.0;
        rows.push(LpRow { coeffs, sense: Sense::Le, rhs: upper as f64 });
        if node.lower[e] > 0 {
            let mut coeffs = vec![0.0; n];
            coeffs[e] = 1.0;
            rows.push(LpRow { coeffs, sense: Sense::Ge, rhs: node.lower[e] as f64 });
        }
    }

    LpProblem {
        num_vars: n,
        objective: edges.iter().map(|e| e.weight).collect(),
        rows,
    }
}

fn most_violated_cut(graph: &RouteGraph, capacity: u32, x: &[f64]) -> Option<Cut> {
    let subsets = (1u32 << graph.operator_count()) - 1;
    let mut best: Option<(f64, Cut)> = None;
    for mask in 1..=subsets {
        let rhs = subset_requirement(mask, capacity) as f64;
        let lhs: f64 = graph
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, edge)| graph.crosses_subset(edge, mask))
            .map(|(e, _)| x[e])
            .sum();
        let violation = rhs - lhs;
        if violation > 1e-6 && best.as_ref().is_none_or(|(v, _)| violation > *v + 1e-12) {
            best = Some((violation, Cut { mask, rhs }));
        }
    }
    best.map(|(_, cut)| cut)
}

fn rounded_if_integral(x: &[f64]) -> Option<Vec<u32>> {
    let mut out = Vec::with_capacity(x.len());
    for &v in x {
        let r = v.round();
        if (v - r).abs() > INT_TOL || r < -0.5 {
            return None;
        }
        out.push(r.max(0.0) as u32);
    }
    Some(out)
}

fn most_fractional(x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_distance = f64::INFINITY;
    for (e, &v) in x.iter().enumerate() {
        let frac = v - v.floor();
        let distance = (frac - 0.5).abs();
        if distance < best_distance - 1e-12 {
            best_distance = distance;
            best = e;
        }
    }
    best
}

/// One stop of the extracted route.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Visit {
    DepotStart,
    /// Operator list index.
    Operator(usize),
    /// Refill list index, mid-route.
    Refill(usize),
    /// Refill list index where the mission ends.
    FinalRefill(usize),
}

/// Ordered visit sequence extracted from an ILP solution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutePlan {
    pub visits: Vec<Visit>,
}

impl RoutePlan {
    /// Waypoint of each visit.
    pub fn waypoints(&self, graph: &RouteGraph) -> Vec<[f64; 3]> {
        self.visits
            .iter()
            .map(|visit| match visit {
                Visit::DepotStart => graph.position(DEPOT_VERTEX),
                Visit::Operator(i) => graph.position(graph.operator_vertex(*i)),
                Visit::Refill(i) | Visit::FinalRefill(i) => {
                    graph.position(graph.refill_vertex(*i))
                }
            })
            .collect()
    }
}

/// Walks the solution multigraph from the depot, consuming one multiplicity
/// unit per traversal; at refill vertices the smallest-index unvisited
/// operator is taken first.
pub fn extract_route(solution: &IlpSolution, graph: &RouteGraph) -> Result<RoutePlan, RouteError> {
    let mut remaining = solution.multiplicities.clone();
    let malformed = |msg: &str| RouteError::MalformedSolution(msg.to_string());

    let depot_edges: Vec<usize> = graph
        .incident_edges(DEPOT_VERTEX)
        .iter()
        .copied()
        .filter(|&e| remaining[e] > 0)
        .collect();
    if depot_edges.len() != 1 || remaining[depot_edges[0]] != 1 {
        return Err(malformed("depot must have exactly one outgoing traversal"));
    }
    let first = depot_edges[0];
    remaining[first] -= 1;
    let mut current = other_endpoint(&graph.edges()[first], DEPOT_VERTEX);
    let mut visits = vec![Visit::DepotStart];
    let mut visited = vec![false; graph.operator_count()];

    loop {
        if graph.is_operator(current) {
            let index = graph.operator_index(current);
            if visited[index] {
                return Err(malformed("walk revisits an operator"));
            }
            visited[index] = true;
            visits.push(Visit::Operator(index));
            let available: Vec<usize> = graph
                .incident_edges(current)
                .iter()
                .copied()
                .filter(|&e| remaining[e] > 0)
                .collect();
            let total: u32 = available.iter().map(|&e| remaining[e]).sum();
            if available.len() != 1 || total != 1 {
                return Err(malformed("operator does not have exactly one departure"));
            }
            remaining[available[0]] -= 1;
            current = other_endpoint(&graph.edges()[available[0]], current);
        } else {
            debug_assert!(graph.is_refill(current));
            let index = graph.refill_index(current);
            let mut targets: Vec<(usize, usize)> = graph
                .incident_edges(current)
                .iter()
                .copied()
                .filter(|&e| remaining[e] > 0)
                .map(|e| (other_endpoint(&graph.edges()[e], current), e))
                .collect();
            if targets.is_empty() {
                visits.push(Visit::FinalRefill(index));
                break;
            }
            visits.push(Visit::Refill(index));
            targets.sort_by_key(|&(vertex, _)| vertex);
            let (target, edge) = targets[0];
            if !graph.is_operator(target) || visited[graph.operator_index(target)] {
                return Err(malformed("refill departure must reach an unvisited operator"));
            }
            remaining[edge] -= 1;
            current = target;
        }
    }

    if remaining.iter().any(|&z| z > 0) {
        return Err(malformed("walk ended with unconsumed edge multiplicities"));
    }
    if !visited.iter().all(|&v| v) {
        return Err(malformed("walk missed an operator"));
    }
    Ok(RoutePlan { visits })
}

fn other_endpoint(edge: &Edge, vertex: usize) -> usize {
    if edge.a == vertex {
        edge.b
    } else {
        edge.a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line_instance() -> RouteGraph {
        // Depot at 0, operators at x=2 and x=4, refill at x=3.
        RouteGraph::from_points(
            [0.0, 0.0, 0.0],
            &[[2.0, 0.0, 0.0], [4.0, 0.0, 0.0]],
            &[[3.0, 0.0, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn builds_expected_edge_domains() {
        let graph = line_instance();
        // depot-op1, depot-op2, op1-op2, op1-rs, op2-rs.
        assert_eq!(graph.edges().len(), 5);
        for edge in graph.edges() {
            let expects_two = graph.is_refill(edge.a) || graph.is_refill(edge.b);
            assert_eq!(edge.max_multiplicity, if expects_two { 2 } else { 1 });
        }
    }

    #[test]
    fn triangle_distance_weight() {
        let graph = RouteGraph::from_points(
            [0.0, 0.0, 0.0],
            &[[3.0, 4.0, 0.0]],
            &[[0.0, 0.0, 1.0]],
        )
        .unwrap();
        let depot_edge = graph
            .edges()
            .iter()
            .find(|e| e.a == DEPOT_VERTEX)
            .unwrap();
        assert_relative_eq!(depot_edge.weight, 5.0);
    }

    #[test]
    fn coincident_operators_get_zero_weight_edges() {
        let graph = RouteGraph::from_points(
            [0.0, 0.0, 0.0],
            &[[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
            &[[2.0, 0.0, 0.0]],
        )
        .unwrap();
        let tt = graph
            .edges()
            .iter()
            .find(|e| graph.is_operator(e.a) && graph.is_operator(e.b))
            .unwrap();
        assert_relative_eq!(tt.weight, 0.0);
    }

    #[test]
    fn two_operator_line_matches_hand_solution() {
        let graph = line_instance();
        let solution = solve_ilp(&graph, 1).unwrap();
        assert_relative_eq!(solution.objective, 5.0, epsilon = 1e-6);
        // depot-op1 once, op1-rs once, rs-op2 twice.
        let find = |a: usize, b: usize| {
            graph
                .edges()
                .iter()
                .position(|e| (e.a, e.b) == (a.min(b), a.max(b)))
                .unwrap()
        };
        let z = &solution.multiplicities;
        assert_eq!(z[find(0, 1)], 1);
        assert_eq!(z[find(1, 3)], 1);
        assert_eq!(z[find(2, 3)], 2);
        assert_eq!(z[find(0, 2)], 0);
        assert_eq!(z[find(1, 2)], 0);
        assert!(verify_solution(&graph, 1, z));
    }

    #[test]
    fn extracts_the_line_route_in_order() {
        let graph = line_instance();
        let solution = solve_ilp(&graph, 1).unwrap();
        let plan = extract_route(&solution, &graph).unwrap();
        assert_eq!(
            plan.visits,
            vec![
                Visit::DepotStart,
                Visit::Operator(0),
                Visit::Refill(0),
                Visit::Operator(1),
                Visit::FinalRefill(0),
            ]
        );
    }

    #[test]
    fn single_operator_route() {
        let graph = RouteGraph::from_points(
            [0.0, 0.0, 0.0],
            &[[2.0, 0.0, 0.0]],
            &[[5.0, 0.0, 0.0]],
        )
        .unwrap();
        let solution = solve_ilp(&graph, 1).unwrap();
        assert_relative_eq!(solution.objective, 5.0, epsilon = 1e-6);
        let plan = extract_route(&solution, &graph).unwrap();
        assert_eq!(
            plan.visits,
            vec![Visit::DepotStart, Visit::Operator(0), Visit::FinalRefill(0)]
        );
    }

    #[test]
    fn refill_tie_takes_smaller_operator_index() {
        // Two operators symmetric about the refill.
        let graph = RouteGraph::from_points(
            [0.0, 0.0, 0.0],
            &[[2.0, 1.0, 0.0], [2.0, -1.0, 0.0]],
            &[[2.0, 0.0, 0.0]],
        )
        .unwrap();
        let solution = solve_ilp(&graph, 1).unwrap();
        let plan = extract_route(&solution, &graph).unwrap();
        let operators: Vec<usize> = plan
            .visits
            .iter()
            .filter_map(|v| match v {
                Visit::Operator(i) => Some(*i),
                _ => None,
            })
            .collect();
        assert_eq!(operators.len(), 2);
        // Whichever operator the depot edge picks, the refill departure
        // takes the smaller remaining index.
        if operators[0] == 1 {
            assert_eq!(operators[1], 0);
        } else {
            assert_eq!(operators, vec![0, 1]);
        }
    }

    #[test]
    fn rejects_operatorless_instances() {
        assert!(matches!(
            RouteGraph::from_points([0.0; 3], &[], &[[1.0, 0.0, 0.0]]),
            Err(RouteError::EmptyScenario)
        ));
    }
}
