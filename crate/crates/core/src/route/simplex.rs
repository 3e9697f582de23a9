//! Two-phase primal simplex on a dense tableau.
//!
//! Small bounded LPs only: the branch-and-bound relaxations here have tens
//! of variables. Bland's smallest-index rule for both entering and leaving
//! variables rules out cycling; reduced costs are recomputed from the
//! tableau every iteration, which is cheap at this size and avoids drift.

const FEAS_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub(crate) struct LpRow {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LpProblem {
    pub num_vars: usize,
    /// Minimized objective coefficients.
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpOutcome {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let factor = self.rows[row][col];
        for value in self.rows[row].iter_mut() {
            *value /= factor;
        }
        self.rhs[row] /= factor;
        for other in 0..self.rows.len() {
            if other == row {
                continue;
            }
            let scale = self.rows[other][col];
            if scale.abs() <= PIVOT_TOL {
                continue;
            }
            for j in 0..self.cols {
                let delta = scale * self.rows[row][j];
                self.rows[other][j] -= delta;
            }
            self.rhs[other] -= scale * self.rhs[row];
            if self.rhs[other].abs() < 1e-12 {
                self.rhs[other] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex for cost vector `cost`, skipping `banned` columns.
    /// Returns false when unbounded.
    fn optimize(&mut self, cost: &[f64], banned: &[bool]) -> bool {
        loop {
            // Reduced costs for the current basis.
            let mut reduced = cost.to_vec();
            for (i, &b) in self.basis.iter().enumerate() {
                let cb = cost[b];
                if cb == 0.0 {
                    continue;
                }
                for j in 0..self.cols {
                    reduced[j] -= cb * self.rows[i][j];
                }
            }
            let entering = (0..self.cols)
                .find(|&j| !banned[j] && reduced[j] < -PIVOT_TOL && !self.basis.contains(&j));
            let Some(col) = entering else {
                return true;
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[i] / a;
                    let better = match leaving {
                        None => true,
                        Some((best_i, best_ratio)) => {
                            ratio < best_ratio - PIVOT_TOL
                                || (ratio < best_ratio + PIVOT_TOL
                                    && self.basis[i] < self.basis[best_i])
                        }
                    };
                    if better {
                        leaving = Some((i, ratio));
                    }
                }
            }
            let Some((row, _)) = leaving else {
                return false;
            };
            self.pivot(row, col);
        }
    }

    fn objective_value(&self, cost: &[f64]) -> f64 {
        self.basis.iter().enumerate().map(|(i, &b)| cost[b] * self.rhs[i]).sum()
    }

    fn solution(&self, num_vars: usize) -> Vec<f64> {
        let mut x = vec![0.0; num_vars];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < num_vars {
                x[b] = self.rhs[i];
            }
        }
        x
    }
}

pub(crate) fn solve_lp(problem: &LpProblem) -> LpOutcome {
    let n = problem.num_vars;
    let m = problem.rows.len();

    // Normalize right-hand sides to be non-negative.
    let mut rows = problem.rows.clone();
    for row in rows.iter_mut() {
        assert_eq!(row.coeffs.len(), n, "row width mismatch");
        if row.rhs < 0.0 {
            row.rhs = -row.rhs;
            for c in row.coeffs.iter_mut() {
                *c = -*c;
            }
            row.sense = match row.sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }

    let slack_count =
        rows.iter().filter(|r| matches!(r.sense, Sense::Le | Sense::Ge)).count();
    let artificial_count =
        rows.iter().filter(|r| matches!(r.sense, Sense::Ge | Sense::Eq)).count();
    let cols = n + slack_count + artificial_count;

    let mut tableau = Tableau {
        rows: vec![vec![0.0; cols]; m],
        rhs: vec![0.0; m],
        basis: vec![0; m],
        cols,
    };
    let mut next_slack = n;
    let mut next_artificial = n + slack_count;
    let mut artificial_cols = Vec::with_capacity(artificial_count);
    for (i, row) in rows.iter().enumerate() {
        tableau.rows[i][..n].copy_from_slice(&row.coeffs);
        tableau.rhs[i] = row.rhs;
        match row.sense {
            Sense::Le => {
                tableau.rows[i][next_slack] = 1.0;
                tableau.basis[i] = next_slack;
                next_slack += 1;
            }
            Sense::Ge => {
                tableau.rows[i][next_slack] = -1.0;
                next_slack += 1;
                tableau.rows[i][next_artificial] = 1.0;
                tableau.basis[i] = next_artificial;
                artificial_cols.push(next_artificial);
                next_artificial += 1;
            }
            Sense::Eq => {
                tableau.rows[i][next_artificial] = 1.0;
                tableau.basis[i] = next_artificial;
                artificial_cols.push(next_artificial);
                next_artificial += 1;
            }
        }
    }

    let mut banned = vec![false; cols];
    if artificial_count > 0 {
        let mut phase1_cost = vec![0.0; cols];
        for &col in &artificial_cols {
            phase1_cost[col] = 1.0;
        }
        if !tableau.optimize(&phase1_cost, &banned) {
            // Phase 1 is bounded below by zero; this cannot happen.
            return LpOutcome::Infeasible;
        }
        if tableau.objective_value(&phase1_cost) > FEAS_TOL {
            return LpOutcome::Infeasible;
        }
        // Drive artificials out of the basis so they can never grow back
        // during phase 2. A row whose non-artificial coefficients are all
        // zero is redundant and keeps its artificial pinned at zero.
        let first_artificial = n + slack_count;
        for row in 0..m {
            if tableau.basis[row] < first_artificial {
                continue;
            }
            let replacement =
                (0..first_artificial).find(|&j| tableau.rows[row][j].abs() > PIVOT_TOL);
            if let Some(col) = replacement {
                tableau.pivot(row, col);
            }
        }
    }
    for &col in &artificial_cols {
        banned[col] = true;
    }

    let mut cost = vec![0.0; cols];
    cost[..n].copy_from_slice(&problem.objective);
    if !tableau.optimize(&cost, &banned) {
        return LpOutcome::Unbounded;
    }

    let x = tableau.solution(n);
    let objective = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpOutcome::Optimal { x, objective }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn row(coeffs: Vec<f64>, sense: Sense, rhs: f64) -> LpRow {
        LpRow { coeffs, sense, rhs }
    }

    #[test]
    fn maximizes_on_a_simplex_face() {
        // min -x - y  s.t.  x + y <= 1.
        let lp = LpProblem {
            num_vars: 2,
            objective: vec![-1.0, -1.0],
            rows: vec![row(vec![1.0, 1.0], Sense::Le, 1.0)],
        };
        match solve_lp(&lp) {
            LpOutcome::Optimal { objective, x } => {
                assert_relative_eq!(objective, -1.0, epsilon = 1e-9);
                assert_relative_eq!(x[0] + x[1], 1.0, epsilon = 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn solves_with_ge_rows() {
        // min x + y  s.t.  x + 2y >= 4,  3x + y >= 6.
        let lp = LpProblem {
            num_vars: 2,
            objective: vec![1.0, 1.0],
            rows: vec![
                row(vec![1.0, 2.0], Sense::Ge, 4.0),
                row(vec![3.0, 1.0], Sense::Ge, 6.0),
            ],
        };
        match solve_lp(&lp) {
            LpOutcome::Optimal { objective, x } => {
                assert_relative_eq!(objective, 2.8, epsilon = 1e-9);
                assert_relative_eq!(x[0], 1.6, epsilon = 1e-9);
                assert_relative_eq!(x[1], 1.2, epsilon = 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn detects_infeasibility() {
        // x <= -1 with x >= 0.
        let lp = LpProblem {
            num_vars: 1,
            objective: vec![1.0],
            rows: vec![row(vec![1.0], Sense::Le, -1.0)],
        };
        assert_eq!(solve_lp(&lp), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        // min -x with only x >= 1.
        let lp = LpProblem {
            num_vars: 1,
            objective: vec![-1.0],
            rows: vec![row(vec![1.0], Sense::Ge, 1.0)],
        };
        assert_eq!(solve_lp(&lp), LpOutcome::Unbounded);
    }

    #[test]
    fn handles_equality_rows() {
        // min x + 2y  s.t.  x + y = 3,  y <= 1.
        let lp = LpProblem {
            num_vars: 2,
            objective: vec![1.0, 2.0],
            rows: vec![
                row(vec![1.0, 1.0], Sense::Eq, 3.0),
                row(vec![0.0, 1.0], Sense::Le, 1.0),
            ],
        };
        match solve_lp(&lp) {
            LpOutcome::Optimal { objective, x } => {
                assert_relative_eq!(objective, 3.0, epsilon = 1e-9);
                assert_relative_eq!(x[0], 3.0, epsilon = 1e-9);
                assert_relative_eq!(x[1], 0.0, epsilon = 1e-9);
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }

    #[test]
    fn degenerate_vertices_do_not_cycle() {
        // Klee-Minty-ish degenerate square: several tight rows at optimum.
        let lp = LpProblem {
            num_vars: 2,
            objective: vec![-1.0, 0.0],
            rows: vec![
                row(vec![1.0, 0.0], Sense::Le, 1.0),
                row(vec![1.0, 1.0], Sense::Le, 1.0),
                row(vec![1.0, -1.0], Sense::Le, 1.0),
            ],
        };
        match solve_lp(&lp) {
            LpOutcome::Optimal { objective, .. } => {
                assert_relative_eq!(objective, -1.0, epsilon = 1e-9)
            }
            other => panic!("unexpected outcome {other:?}"),
        }
    }
}
