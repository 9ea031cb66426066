//! Dense two-phase tableau simplex.
//!
//! Phase one minimizes the sum of artificial variables; phase two minimizes
//! the real objective with artificials barred from re-entering. Entering
//! columns are picked by Dantzig's rule until the objective stalls for
//! `bland_after` consecutive pivots, after which Bland's rule takes over for
//! the rest of the phase.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    Eq,
    Le,
    Ge,
}

/// Sparse row `sum coeffs[k].1 * x[coeffs[k].0] (relation) rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `minimize objective . x` subject to the constraints and `x >= 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    num_vars: usize,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![0.0; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) {
        assert_eq!(objective.len(), self.num_vars, "objective length mismatch");
        self.objective = objective;
    }

    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        assert!(coeffs.iter().all(|(j, _)| *j < self.num_vars), "constraint refers to unknown variable");
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest constraint violation at `x` (bounds excluded).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| {
                let lhs: f64 = c.coeffs.iter().map(|(j, a)| a * x[*j]).sum();
                match c.relation {
                    Relation::Eq => (lhs - c.rhs).abs(),
                    Relation::Le => (lhs - c.rhs).max(0.0),
                    Relation::Ge => (c.rhs - lhs).max(0.0),
                }
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SimplexStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Smallest tableau entry accepted as a pivot.
    pub pivot_tol: f64,
    /// Reduced costs above `-cost_tol` count as nonnegative.
    pub cost_tol: f64,
    /// Largest phase-one objective (sum of artificials) still deemed feasible.
    pub feasibility_tol: f64,
    /// Pivot budget per phase; `None` scales with the tableau size.
    pub max_iterations: Option<usize>,
    /// Stalled pivots tolerated before switching to Bland's rule; `None`
    /// uses ten times the number of rows plus columns.
    pub bland_after: Option<usize>,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-11,
            cost_tol: 1e-11,
            feasibility_tol: 1e-8,
            max_iterations: None,
            bland_after: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimplexResult {
    pub status: SimplexStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Sum of artificial variables at the end of phase one.
    pub infeasibility: f64,
    pub used_bland: bool,
}

struct Tableau {
    width: usize,
    rows: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.width - 1]
    }

    /// Objective row sits below the constraint rows.
    fn obj(&self, c: usize) -> f64 {
        self.at(self.rows, c)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let factor = self.data[r * w + pc];
            if factor == 0.0 {
                continue;
            }
            let row = &mut self.data[r * w..(r + 1) * w];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                *v -= factor * p;
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// Sets the objective row to the reduced costs of `costs` under the
    /// current basis.
    fn price(&mut self, costs: &[f64]) {
        let w = self.width;
        let base = self.rows * w;
        self.data[base..base + w].fill(0.0);
        self.data[base..base + costs.len()].copy_from_slice(costs);
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for c in 0..w {
                let v = self.data[r * w + c];
                self.data[base + c] -= cb * v;
            }
        }
    }

    fn objective_value(&self) -> f64 {
        -self.obj(self.width - 1)
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Phase<'a> {
    opts: &'a SimplexOptions,
    allowed: usize,
    max_iterations: usize,
    bland_after: usize,
}

impl Phase<'_> {
    fn run(&self, t: &mut Tableau, iterations: &mut usize, used_bland: &mut bool) -> PhaseEnd {
        let mut stalled = 0usize;
        let mut bland = false;
        let mut last = t.objective_value();
        for _ in 0..self.max_iterations {
            let entering = if bland {
                (0..self.allowed).find(|&c| t.obj(c) < -self.opts.cost_tol)
            } else {
                (0..self.allowed)
                    .filter(|&c| t.obj(c) < -self.opts.cost_tol)
                    .min_by(|&a, &b| t.obj(a).total_cmp(&t.obj(b)))
            };
            let Some(pc) = entering else {
                return PhaseEnd::Optimal;
            };

            let mut leave: Option<(usize, f64)> = None;
            for r in 0..t.rows {
                let a = t.at(r, pc);
                if a <= self.opts.pivot_tol {
                    continue;
                }
                let ratio = t.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((best, best_ratio)) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs());
                        let better = if tie {
                            if bland {
                                t.basis[r] < t.basis[best]
                            } else {
                                a > t.at(best, pc)
                            }
                        } else {
                            ratio < best_ratio
                        };
                        if better {
                            Some((r, ratio))
                        } else {
                            Some((best, best_ratio))
                        }
                    }
                };
            }
            let Some((pr, _)) = leave else {
                return PhaseEnd::Unbounded;
            };

            t.pivot(pr, pc);
            *iterations += 1;

            let value = t.objective_value();
            if value < last - 1e-13 * (1.0 + last.abs()) {
                stalled = 0;
            } else {
                stalled += 1;
                if stalled >= self.bland_after && !bland {
                    bland = true;
                    *used_bland = true;
                }
            }
            last = value;
        }
        PhaseEnd::IterationLimit
    }
}

/// Solves `lp` to optimality, reporting infeasibility through the status.
pub fn solve(lp: &LinearProgram, opts: &SimplexOptions) -> SimplexResult {
    let n = lp.num_vars;
    let m = lp.constraints.len();

    let slack_count = lp
        .constraints
        .iter()
        .filter(|c| c.relation != Relation::Eq)
        .count();

    // Normalize each row to a nonnegative right-hand side.
    let mut rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            if c.rhs < 0.0 {
                let flipped = match c.relation {
                    Relation::Eq => Relation::Eq,
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                };
                (c.coeffs.iter().map(|(j, a)| (*j, -a)).collect(), flipped, -c.rhs)
            } else {
                (c.coeffs.clone(), c.relation, c.rhs)
            }
        })
        .collect();
    let artificial_count = rows.iter().filter(|r| r.1 != Relation::Le).count();

    let first_slack = n;
    let first_artificial = n + slack_count;
    let cols = first_artificial + artificial_count;
    let width = cols + 1;

    let mut t = Tableau {
        width,
        rows: m,
        data: vec![0.0; (m + 1) * width],
        basis: vec![0; m],
    };
    let mut next_slack = first_slack;
    let mut next_artificial = first_artificial;
    for (r, (coeffs, relation, rhs)) in rows.drain(..).enumerate() {
        for (j, a) in coeffs {
            t.data[r * width + j] += a;
        }
        t.data[r * width + cols] = rhs;
        match relation {
            Relation::Le => {
                t.data[r * width + next_slack] = 1.0;
                t.basis[r] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                t.data[r * width + next_slack] = -1.0;
                next_slack += 1;
                t.data[r * width + next_artificial] = 1.0;
                t.basis[r] = next_artificial;
                next_artificial += 1;
            }
            Relation::Eq => {
                t.data[r * width + next_artificial] = 1.0;
                t.basis[r] = next_artificial;
                next_artificial += 1;
            }
        }
    }

    let max_iterations = opts.max_iterations.unwrap_or(10_000 + 50 * (m + cols));
    let bland_after = opts.bland_after.unwrap_or(10 * (m + cols)).max(1);
    let mut iterations = 0;
    let mut used_bland = false;

    let result = |status, x: Vec<f64>, objective, iterations, infeasibility, used_bland| SimplexResult {
        status,
        x,
        objective,
        iterations,
        infeasibility,
        used_bland,
    };

    // Phase one.
    let mut phase_one_costs = vec![0.0; cols];
    phase_one_costs[first_artificial..].fill(1.0);
    t.price(&phase_one_costs);
    let phase_one = Phase {
        opts,
        allowed: cols,
        max_iterations,
        bland_after,
    };
    match phase_one.run(&mut t, &mut iterations, &mut used_bland) {
        PhaseEnd::Optimal => {}
        PhaseEnd::Unbounded | PhaseEnd::IterationLimit => {
            return result(SimplexStatus::IterationLimit, vec![0.0; n], f64::NAN, iterations, f64::NAN, used_bland)
        }
    }
    let infeasibility = t.objective_value().max(0.0);
    if infeasibility > opts.feasibility_tol {
        return result(SimplexStatus::Infeasible, vec![0.0; n], f64::NAN, iterations, infeasibility, used_bland);
    }

    // Pivot remaining artificials out of the basis; rows where that is
    // impossible are redundant and left alone.
    for r in 0..m {
        if t.basis[r] < first_artificial {
            continue;
        }
        let candidate = (0..first_artificial)
            .filter(|&c| t.at(r, c).abs() > opts.pivot_tol)
            .max_by(|&a, &b| t.at(r, a).abs().total_cmp(&t.at(r, b).abs()));
        if let Some(c) = candidate {
            t.pivot(r, c);
            iterations += 1;
        } else {
            let w = t.width;
            for c in 0..first_artificial {
                t.data[r * w + c] = 0.0;
            }
            t.data[r * w + cols] = 0.0;
        }
    }

    // Phase two.
    let mut costs = vec![0.0; cols];
    costs[..n].copy_from_slice(&lp.objective);
    t.price(&costs);
    let phase_two = Phase {
        opts,
        allowed: first_artificial,
        max_iterations,
        bland_after,
    };
    let status = match phase_two.run(&mut t, &mut iterations, &mut used_bland) {
        PhaseEnd::Optimal => SimplexStatus::Optimal,
        PhaseEnd::Unbounded => SimplexStatus::Unbounded,
        PhaseEnd::IterationLimit => SimplexStatus::IterationLimit,
    };

    let mut x = vec![0.0; n];
    for r in 0..m {
        let b = t.basis[r];
        if b < n {
            x[b] = t.rhs(r).max(0.0);
        }
    }
    let objective = lp.evaluate(&x);
    result(status, x, objective, iterations, infeasibility, used_bland)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), value 36.
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![-3.0, -5.0]);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 4.0);
        lp.add_constraint(vec![(1, 2.0)], Relation::Le, 12.0);
        lp.add_constraint(vec![(0, 3.0), (1, 2.0)], Relation::Le, 18.0);
        let r = solve(&lp, &SimplexOptions::default());
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert_abs_diff_eq!(r.x[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.x[1], 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.objective, -36.0, epsilon = 1e-12);
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y s.t. x + y >= 2, x - y = 1 -> x = 1.5, y = 0.5.
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![1.0, 1.0]);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 2.0);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Eq, 1.0);
        let r = solve(&lp, &SimplexOptions::default());
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert_abs_diff_eq!(r.objective, 2.0, epsilon = 1e-12);
        assert!(lp.max_violation(&r.x) < 1e-12);
    }

    #[test]
    fn negative_rhs_is_normalized() {
        // -x <= -3  <=>  x >= 3.
        let mut lp = LinearProgram::new(1);
        lp.set_objective(vec![1.0]);
        lp.add_constraint(vec![(0, -1.0)], Relation::Le, -3.0);
        let r = solve(&lp, &SimplexOptions::default());
        assert_abs_diff_eq!(r.x[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn detects_infeasibility() {
        let mut lp = LinearProgram::new(1);
        lp.add_constraint(vec![(0, 1.0)], Relation::Le, 1.0);
        lp.add_constraint(vec![(0, 1.0)], Relation::Ge, 2.0);
        assert_eq!(solve(&lp, &SimplexOptions::default()).status, SimplexStatus::Infeasible);
    }

    #[test]
    fn detects_unboundedness() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![-1.0, 0.0]);
        lp.add_constraint(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0);
        assert_eq!(solve(&lp, &SimplexOptions::default()).status, SimplexStatus::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::new(2);
        lp.set_objective(vec![1.0, 2.0]);
        lp.add_constraint(vec![(0, 1.0), (1, 1.0)], Relation::Eq, 1.0);
        lp.add_constraint(vec![(0, 2.0), (1, 2.0)], Relation::Eq, 2.0);
        let r = solve(&lp, &SimplexOptions::default());
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert_abs_diff_eq!(r.objective, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example cycles under the textbook largest-coefficient rule.
        let mut lp = LinearProgram::new(4);
        lp.set_objective(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_constraint(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Relation::Le, 0.0);
        lp.add_constraint(vec![(2, 1.0)], Relation::Le, 1.0);
        let opts = SimplexOptions {
            bland_after: Some(2),
            ..SimplexOptions::default()
        };
        let r = solve(&lp, &opts);
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert_abs_diff_eq!(r.objective, -0.05, epsilon = 1e-12);
    }
}
