//! Exact LP formulation of the discretized martingale transport problem.
//!
//! Variables are the masses `pi[i][j]` of every source/target pair. Row sums
//! reproduce `mu`, column sums reproduce `nu`, and each source atom carries
//! one barycenter row per coordinate, written as
//! `sum_j (y_j - x_i) pi[i][j] = 0`.

pub mod simplex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coupling::{euclidean, Coupling};
use crate::error::{MotError, Result};
use crate::measures::DiscreteMeasure;

pub use simplex::{LinearProgram, Relation, SimplexOptions, SimplexResult, SimplexStatus};

/// Largest number of pair variables accepted.
pub const MAX_PAIRS: usize = 250_000;

/// Two optimal couplings closer than this (entrywise) are the same.
pub const PROBE_TOL: f64 = 1e-7;

/// Entries below this are dropped when reading the coupling off the LP.
const ENTRY_FLOOR: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    NumericalFailure,
}

/// The martingale transport LP for a pair of atomic marginals.
#[derive(Clone, Debug)]
pub struct MotLp {
    mu: DiscreteMeasure,
    nu: DiscreteMeasure,
    p: f64,
    cost: Vec<f64>,
}

impl MotLp {
    pub fn new(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<Self> {
        if mu.dim() != nu.dim() {
            return Err(MotError::invalid("marginals live in different dimensions"));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(MotError::invalid(format!("cost exponent must be positive, got {p}")));
        }
        if mu.len() * nu.len() > MAX_PAIRS {
            return Err(MotError::invalid(format!(
                "{} x {} pairs exceed the oracle limit of {MAX_PAIRS}",
                mu.len(),
                nu.len()
            )));
        }
        let cost = mu
            .atoms()
            .flat_map(|(x, _)| nu.atoms().map(move |(y, _)| euclidean(x, y).powf(p)))
            .collect();
        Ok(Self {
            mu: mu.clone(),
            nu: nu.clone(),
            p,
            cost,
        })
    }

    pub fn sources(&self) -> usize {
        self.mu.len()
    }

    pub fn targets(&self) -> usize {
        self.nu.len()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Row-major `|x_i - y_j|^p`.
    pub fn cost_matrix(&self) -> &[f64] {
        &self.cost
    }

    fn var(&self, i: usize, j: usize) -> usize {
        i * self.nu.len() + j
    }

    /// The LP in minimization form (`Max` negates the objective).
    pub fn program(&self, sense: Sense) -> LinearProgram {
        let (m, n, d) = (self.mu.len(), self.nu.len(), self.mu.dim());
        let mut lp = LinearProgram::new(m * n);
        lp.set_objective(match sense {
            Sense::Min => self.cost.clone(),
            Sense::Max => self.cost.iter().map(|c| -c).collect(),
        });
        for i in 0..m {
            lp.add_constraint((0..n).map(|j| (self.var(i, j), 1.0)).collect(), Relation::Eq, self.mu.mass(i));
        }
        for j in 0..n {
            lp.add_constraint((0..m).map(|i| (self.var(i, j), 1.0)).collect(), Relation::Eq, self.nu.mass(j));
        }
        for i in 0..m {
            let x = self.mu.point(i);
            for k in 0..d {
                let coeffs = (0..n)
                    .map(|j| (self.var(i, j), self.nu.point(j)[k] - x[k]))
                    .filter(|(_, a)| *a != 0.0)
                    .collect();
                lp.add_constraint(coeffs, Relation::Eq, 0.0);
            }
        }
        lp
    }

    /// Reads a coupling off a vector of pair masses.
    pub fn coupling_from(&self, x: &[f64]) -> Coupling {
        let mut c = Coupling::new(self.mu.dim());
        for i in 0..self.mu.len() {
            for j in 0..self.nu.len() {
                let mass = x[self.var(i, j)];
                if mass > ENTRY_FLOOR {
                    c.push(self.mu.point(i).to_vec(), self.nu.point(j).to_vec(), mass)
                        .expect("LP entries are finite");
                }
            }
        }
        c
    }

    /// Simplex options scaled to the marginals: phase one declares
    /// infeasibility above `1e-8` times the total mass.
    pub fn options(&self) -> SimplexOptions {
        SimplexOptions {
            feasibility_tol: 1e-8 * self.mu.total_mass().max(self.nu.total_mass()).max(f64::MIN_POSITIVE),
            ..SimplexOptions::default()
        }
    }

    fn scale(&self) -> f64 {
        let span = self
            .mu
            .points()
            .iter()
            .chain(self.nu.points())
            .fold(1.0f64, |acc, v| acc.max(v.abs()));
        span * self.mu.total_mass().max(1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub coupling: Coupling,
    /// `sum pi * |x - y|^p` (the cost, regardless of the sense).
    pub objective: f64,
    pub status: LpStatus,
    pub iterations: usize,
    /// Largest constraint residual of the returned plan.
    pub residual: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Optimizes `|x - y|^p` over all martingale couplings of `mu` and `nu`.
///
/// An infeasible status means no martingale coupling exists, i.e. the
/// marginals are not in convex order.
pub fn solve_lp(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64, sense: Sense) -> Result<LpSolution> {
    let problem = MotLp::new(mu, nu, p)?;
    let program = problem.program(sense);
    let result = simplex::solve(&program, &problem.options());
    Ok(finish(&problem, &program, &result))
}

fn finish(problem: &MotLp, program: &LinearProgram, result: &SimplexResult) -> LpSolution {
    match result.status {
        SimplexStatus::Infeasible => LpSolution {
            coupling: Coupling::new(problem.mu.dim()),
            objective: f64::NAN,
            status: LpStatus::Infeasible,
            iterations: result.iterations,
            residual: result.infeasibility,
        },
        SimplexStatus::Optimal => {
            let residual = program.max_violation(&result.x);
            let coupling = problem.coupling_from(&result.x);
            let status = if residual <= 1e-9 * problem.scale() {
                LpStatus::Optimal
            } else {
                LpStatus::NumericalFailure
            };
            LpSolution {
                objective: coupling.cost(problem.p),
                coupling,
                status,
                iterations: result.iterations,
                residual,
            }
        }
        SimplexStatus::Unbounded | SimplexStatus::IterationLimit => LpSolution {
            coupling: Coupling::new(problem.mu.dim()),
            objective: f64::NAN,
            status: LpStatus::NumericalFailure,
            iterations: result.iterations,
            residual: f64::INFINITY,
        },
    }
}

/// Mass of the entries with `x = y` (within `1e-12`).
pub fn diagonal_mass(sol: &LpSolution) -> f64 {
    sol.coupling
        .entries()
        .iter()
        .filter(|e| e.distance() <= 1e-12)
        .map(|e| e.mass)
        .sum()
}

/// Plain transport LP between weight vectors (no martingale rows).
pub fn transport_program(source: &[f64], target: &[f64], cost: &[f64]) -> Result<LinearProgram> {
    let (m, n) = (source.len(), target.len());
    if cost.len() != m * n {
        return Err(MotError::invalid("cost matrix does not match the marginals"));
    }
    let mut lp = LinearProgram::new(m * n);
    lp.set_objective(cost.to_vec());
    for (i, w) in source.iter().enumerate() {
        lp.add_constraint((0..n).map(|j| (i * n + j, 1.0)).collect(), Relation::Eq, *w);
    }
    for (j, w) in target.iter().enumerate() {
        lp.add_constraint((0..m).map(|i| (i * n + j, 1.0)).collect(), Relation::Eq, *w);
    }
    Ok(lp)
}

/// Heuristic check that an LP has a single optimal vertex.
///
/// Re-solves under `trials` random objective perturbations of size
/// `eps` times the smallest gap between distinct cost coefficients, then
/// restricts to the optimal face and minimizes and maximizes a random linear
/// functional over it. Returns `true` iff every optimum found agrees with
/// the unperturbed one within [`PROBE_TOL`].
pub fn program_uniqueness_probe(lp: &LinearProgram, opts: &SimplexOptions, trials: usize, eps: f64, seed: u64) -> Result<bool> {
    let base = simplex::solve(lp, opts);
    if base.status != SimplexStatus::Optimal {
        return Err(MotError::solver(format!("probe base solve ended with {:?}", base.status), base.infeasibility));
    }
    let agrees = |x: &[f64]| x.iter().zip(&base.x).all(|(a, b)| (a - b).abs() <= PROBE_TOL);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gap = min_cost_gap(lp.objective());

    for _ in 0..trials {
        let mut perturbed = lp.clone();
        perturbed.set_objective(
            lp.objective()
                .iter()
                .map(|c| c + eps * gap * rng.random_range(-1.0..=1.0))
                .collect(),
        );
        let r = simplex::solve(&perturbed, opts);
        if r.status != SimplexStatus::Optimal {
            return Err(MotError::solver(format!("perturbed solve ended with {:?}", r.status), r.infeasibility));
        }
        if !agrees(&r.x) {
            return Ok(false);
        }
    }

    // Optimal face: objective within a hair of the optimum.
    let slack = 1e-11 * base.objective.abs().max(1.0);
    let mut face = lp.clone();
    face.add_constraint(
        lp.objective().iter().copied().enumerate().filter(|(_, c)| *c != 0.0).collect(),
        Relation::Le,
        base.objective + slack,
    );
    let functional: Vec<f64> = (0..lp.num_vars()).map(|_| rng.random_range(0.0..1.0)).collect();
    for sign in [1.0, -1.0] {
        face.set_objective(functional.iter().map(|w| sign * w).collect());
        let r = simplex::solve(&face, opts);
        if r.status != SimplexStatus::Optimal {
            return Err(MotError::solver(format!("tie-break solve ended with {:?}", r.status), r.infeasibility));
        }
        if !agrees(&r.x) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest positive difference between distinct objective coefficients
/// (one when all coefficients coincide).
fn min_cost_gap(objective: &[f64]) -> f64 {
    let mut sorted = objective.to_vec();
    sorted.sort_by(f64::total_cmp);
    let span = sorted.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    let gap = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d > 1e-12 * span)
        .fold(f64::INFINITY, f64::min);
    if gap.is_finite() {
        gap
    } else {
        1.0
    }
}

/// [`program_uniqueness_probe`] for the martingale transport LP.
pub fn uniqueness_probe(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    p: f64,
    trials: usize,
    eps: f64,
    seed: u64,
) -> Result<bool> {
    let problem = MotLp::new(mu, nu, p)?;
    let program = problem.program(Sense::Min);
    program_uniqueness_probe(&program, &problem.options(), trials, eps, seed)
}
