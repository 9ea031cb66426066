//! Constructive solver for the one-dimensional problem under separation.
//!
//! When an open interval `(a, b)` carries all of `mu` and none of `nu`, every
//! optimal martingale coupling for `|x - y|^p`, `0 < p <= 1`, has supports
//! that decrease in `x` on both sides of the interval. That forces a unique
//! coupling: scanning `mu` from left to right, each atom takes mass from the
//! top of what is left of `nu` below `a` and from the top of what is left of
//! `nu` above `b`, split so that mass and barycenter are preserved. The
//! construction never looks at `p`.

use serde::Serialize;

use crate::coupling::Coupling;
use crate::error::{MotError, Result};
use crate::measures::{convex_order_check, DiscreteMeasure, MASS_TOL};

/// Default solver tolerance.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Bisection stops once the bracket on the split mass is this narrow
/// (relative to the atom mass).
const BISECTION_WIDTH: f64 = 1e-14;

/// A frontier atom counts as exhausted once less than this fraction remains.
const EXHAUSTED: f64 = 1e-12;

/// Open interval `(a, b)` with `mu((a, b)) = mu(R)` and `nu((a, b)) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeparationInterval {
    pub a: f64,
    pub b: f64,
}

impl SeparationInterval {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(MotError::invalid(format!("separation interval needs a < b, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a < x && x < self.b
    }

    /// Checks that the interval separates the two marginals.
    pub fn validate(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
        if mu.dim() != 1 || nu.dim() != 1 {
            return Err(MotError::invalid("the sweep solver is one-dimensional"));
        }
        if let Some((x, _)) = mu.atoms_1d().find(|(x, _)| !self.contains(*x)) {
            return Err(MotError::SeparationViolated(format!(
                "mu has an atom at {x} outside ({}, {})",
                self.a, self.b
            )));
        }
        if let Some((y, _)) = nu.atoms_1d().find(|(y, _)| self.contains(*y)) {
            return Err(MotError::SeparationViolated(format!(
                "nu has an atom at {y} inside ({}, {})",
                self.a, self.b
            )));
        }
        Ok(())
    }
}

/// Finds the widest open interval between `nu` atoms that contains the
/// support of `mu`, if `nu` puts no mass on the convex hull of `supp(mu)`.
///
/// Where `nu` has no atoms on one side the interval is extended by one unit
/// beyond the hull.
pub fn detect_separation(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Option<SeparationInterval> {
    if mu.dim() != 1 || nu.dim() != 1 || mu.is_empty() {
        return None;
    }
    let lo = mu.position(0);
    let hi = mu.position(mu.len() - 1);
    if nu.atoms_1d().any(|(y, _)| lo <= y && y <= hi) {
        return None;
    }
    let a = nu
        .atoms_1d()
        .map(|(y, _)| y)
        .filter(|y| *y < lo)
        .fold(f64::NEG_INFINITY, f64::max);
    let b = nu
        .atoms_1d()
        .map(|(y, _)| y)
        .filter(|y| *y > hi)
        .fold(f64::INFINITY, f64::min);
    let a = if a.is_finite() { a } else { lo - 1.0 };
    let b = if b.is_finite() { b } else { hi + 1.0 };
    SeparationInterval::new(a, b).ok()
}

/// Map values recorded at one source atom.
///
/// `s` and `t` are the lowest atoms of `nu` below and above the interval
/// touched by the row; `lambda_minus` and `lambda_plus` are the fractions of
/// those atoms consumed once the row is processed (cumulative over rows).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MapRow {
    pub x: f64,
    pub s: f64,
    pub t: f64,
    pub lambda_minus: f64,
    pub lambda_plus: f64,
}

/// `S`, `T`, `lambda-`, `lambda+` sampled at the atoms of `mu`, ordered by `x`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct TransportMaps {
    pub rows: Vec<MapRow>,
}

/// Exponent of the cost `|x - y|^p`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostSpec {
    p: f64,
}

impl CostSpec {
    /// Exponent in `(0, 1]`, the range covered by the solvers.
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(MotError::invalid(format!("cost exponent must lie in (0, 1], got {p}")));
        }
        Ok(Self { p })
    }

    /// Any positive exponent, for experiments outside the solver range.
    pub fn relaxed(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(MotError::invalid(format!("cost exponent must be positive, got {p}")));
        }
        Ok(Self { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eval(&self, distance: f64) -> f64 {
        distance.powf(self.p)
    }
}

/// Sweep output: the coupling and its map description.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSolution {
    pub coupling: Coupling,
    pub maps: TransportMaps,
}

/// `sum mass * |x - y|^p`.
pub fn cost(pi: &Coupling, p: f64) -> f64 {
    pi.cost(p)
}

/// Atoms of `nu` on one side of the interval, consumed from the largest
/// position downwards.
struct Frontier {
    atoms: Vec<(f64, f64)>,
    idx: usize,
    used: f64,
}

impl Frontier {
    fn new(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| b.0.total_cmp(&a.0));
        Self { atoms, idx: 0, used: 0.0 }
    }

    fn remaining(&self) -> f64 {
        match self.atoms.get(self.idx) {
            None => 0.0,
            Some((_, m)) => (m - self.used) + self.atoms[self.idx + 1..].iter().map(|(_, m)| m).sum::<f64>(),
        }
    }

    /// First moment of the next `amount` of mass, without consuming it.
    fn moment(&self, mut amount: f64) -> f64 {
        let mut moment = 0.0;
        let mut used = self.used;
        for &(y, m) in &self.atoms[self.idx..] {
            if amount <= 0.0 {
                break;
            }
            let take = (m - used).min(amount);
            moment += y * take;
            amount -= take;
            used = 0.0;
        }
        moment
    }

    /// Consumes `amount`, emitting entries from source `x`. Returns the
    /// lowest touched atom and the consumed fraction of it.
    fn consume(&mut self, x: f64, mut amount: f64, out: &mut Coupling) -> Option<(f64, f64)> {
        let mut last = None;
        let dust = EXHAUSTED * amount;
        while amount > dust && self.idx < self.atoms.len() {
            let (y, m) = self.atoms[self.idx];
            let take = (m - self.used).min(amount);
            out.push_1d(x, y, take);
            amount -= take;
            self.used += take;
            if m - self.used <= EXHAUSTED * m {
                last = Some((y, 1.0));
                self.idx += 1;
                self.used = 0.0;
            } else {
                last = Some((y, self.used / m));
            }
        }
        last
    }

    /// The atom currently at the frontier, for rows that take nothing here.
    fn position(&self) -> Option<(f64, f64)> {
        match self.atoms.get(self.idx) {
            Some((y, m)) => Some((*y, self.used / m)),
            None => self.atoms.last().map(|(y, _)| (*y, 1.0)),
        }
    }
}

/// Constructs the optimal martingale coupling under the separation assumption.
///
/// `tol` bounds the per-row barycenter residual and the unconsumed `nu` mass
/// per atom (both relative to the problem scale).
pub fn solve_sweep(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    interval: SeparationInterval,
    tol: f64,
) -> Result<SweepSolution> {
    interval.validate(mu, nu)?;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(MotError::invalid(format!("tolerance must be positive, got {tol}")));
    }

    let span = mu
        .points()
        .iter()
        .chain(nu.points())
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let scale = span * mu.total_mass().max(nu.total_mass()).max(MASS_TOL);

    let report = convex_order_check(mu, nu, tol * scale)?;
    if !report.in_order {
        return Err(report.into_error());
    }

    let mut lower = Frontier::new(nu.atoms_1d().filter(|(y, _)| *y <= interval.a).collect());
    let mut upper = Frontier::new(nu.atoms_1d().filter(|(y, _)| *y >= interval.b).collect());

    let mut coupling = Coupling::new(1);
    let mut maps = TransportMaps::default();

    for (x, m) in mu.atoms_1d() {
        let rem_lower = lower.remaining();
        let rem_upper = upper.remaining();
        let mut lo = (m - rem_upper).max(0.0);
        let mut hi = m.min(rem_lower);
        if lo > hi {
            let short = lo - hi;
            if short > tol * scale {
                return Err(MotError::solver(
                    format!("not enough target mass left for the atom at {x}"),
                    short,
                ));
            }
            hi = lo;
        }

        // Consumed first moment minus the target barycenter; decreasing in rho.
        let excess = |rho: f64| lower.moment(rho) + upper.moment(m - rho) - m * x;

        let mut f_lo = excess(lo);
        let mut f_hi = excess(hi);
        let rho = if f_lo < 0.0 {
            if -f_lo > tol * scale {
                return Err(MotError::solver(format!("barycenter unreachable for the atom at {x}"), -f_lo));
            }
            lo
        } else if f_hi > 0.0 {
            if f_hi > tol * scale {
                return Err(MotError::solver(format!("barycenter unreachable for the atom at {x}"), f_hi));
            }
            hi
        } else {
            let width = BISECTION_WIDTH * m.max(1.0);
            for _ in 0..200 {
                if hi - lo <= width {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let f_mid = excess(mid);
                if f_mid > 0.0 {
                    lo = mid;
                    f_lo = f_mid;
                } else {
                    hi = mid;
                    f_hi = f_mid;
                }
            }
            if f_lo > f_hi {
                lo + f_lo * (hi - lo) / (f_lo - f_hi)
            } else {
                lo
            }
        };

        let residual = excess(rho).abs();
        if residual > tol * scale {
            return Err(MotError::solver(format!("barycenter residual at the atom at {x}"), residual));
        }

        let touched_lower = lower.consume(x, rho, &mut coupling).or_else(|| lower.position());
        let touched_upper = upper.consume(x, m - rho, &mut coupling).or_else(|| upper.position());
        let (s, lambda_minus) = touched_lower.unwrap_or((interval.a, 0.0));
        let (t, lambda_plus) = touched_upper.unwrap_or((interval.b, 0.0));
        maps.rows.push(MapRow {
            x,
            s,
            t,
            lambda_minus,
            lambda_plus,
        });
    }

    let leftover = lower.remaining() + upper.remaining();
    if leftover > tol * scale * nu.len().max(1) as f64 {
        return Err(MotError::solver("target mass left unconsumed", leftover));
    }

    Ok(SweepSolution { coupling, maps })
}

/// Sweep for marginals symmetric about the origin; the output is checked to
/// be invariant under `(x, y) -> (-x, -y)`.
pub fn symmetric_solve(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    interval: SeparationInterval,
) -> Result<SweepSolution> {
    const SYMMETRY_TOL: f64 = 1e-9;
    if !mu.is_symmetric(SYMMETRY_TOL) {
        return Err(MotError::invalid("mu is not symmetric about the origin"));
    }
    if !nu.is_symmetric(SYMMETRY_TOL) {
        return Err(MotError::invalid("nu is not symmetric about the origin"));
    }
    let solution = solve_sweep(mu, nu, interval, DEFAULT_TOL)?;
    let asymmetry = solution.coupling.entrywise_distance(&solution.coupling.reflected());
    if asymmetry > SYMMETRY_TOL {
        return Err(MotError::solver("sweep output is not reflection invariant", asymmetry));
    }
    Ok(solution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(atoms: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::from_1d(atoms).unwrap()
    }

    #[test]
    fn dirac_splits_symmetrically() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        let sol = solve_sweep(&mu, &nu, SeparationInterval::new(-1.0, 1.0).unwrap(), DEFAULT_TOL).unwrap();
        let expected = Coupling::from_1d(&[(0.0, -2.0, 0.5), (0.0, 2.0, 0.5)]).unwrap();
        assert!(sol.coupling.entrywise_distance(&expected) < 1e-14);
        assert_abs_diff_eq!(sol.coupling.cost(1.0), 2.0, epsilon = 1e-14);
        assert_eq!(sol.maps.rows, vec![MapRow { x: 0.0, s: -2.0, t: 2.0, lambda_minus: 1.0, lambda_plus: 1.0 }]);
    }

    #[test]
    fn two_atom_example_matches_row_systems() {
        // Row x: rho + q = 1/2 and -2 rho + 2 q = x / 2.
        let mu = m(&[(-0.5, 0.5), (0.5, 0.5)]);
        let nu = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        let sol = solve_sweep(&mu, &nu, SeparationInterval::new(-1.0, 1.0).unwrap(), DEFAULT_TOL).unwrap();
        let expected = Coupling::from_1d(&[
            (-0.5, -2.0, 0.3125),
            (-0.5, 2.0, 0.1875),
            (0.5, -2.0, 0.1875),
            (0.5, 2.0, 0.3125),
        ])
        .unwrap();
        assert!(sol.coupling.entrywise_distance(&expected) < 1e-13);
        assert_abs_diff_eq!(cost(&sol.coupling, 1.0), 1.875, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.maps.rows[0].lambda_minus, 0.625, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.maps.rows[0].lambda_plus, 0.375, epsilon = 1e-12);
        assert_eq!(sol.maps.rows[1].lambda_minus, 1.0);
    }

    #[test]
    fn rejects_separation_violations() {
        let mu = m(&[(0.0, 1.0)]);
        let nu = m(&[(-2.0, 0.25), (0.5, 0.5), (1.0, 0.25)]);
        let err = solve_sweep(&mu, &nu, SeparationInterval::new(-1.0, 1.0).unwrap(), DEFAULT_TOL).unwrap_err();
        assert!(matches!(err, MotError::SeparationViolated(_)));
        let err = solve_sweep(&m(&[(3.0, 1.0)]), &nu, SeparationInterval::new(-1.0, 1.0).unwrap(), DEFAULT_TOL)
            .unwrap_err();
        assert!(matches!(err, MotError::SeparationViolated(_)));
    }

    #[test]
    fn rejects_pairs_out_of_order() {
        let mu = m(&[(0.5, 1.0)]);
        let nu = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        let err = solve_sweep(&mu, &nu, SeparationInterval::new(-1.0, 1.0).unwrap(), DEFAULT_TOL).unwrap_err();
        assert!(matches!(err, MotError::NotInConvexOrder { .. }));
    }

    #[test]
    fn straddling_rows_take_contiguous_runs() {
        // A single atom that must consume several target atoms on each side.
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = m(&[(-3.0, 0.2), (-2.0, 0.3), (2.0, 0.4), (4.0, 0.1)]);
        let sol = solve_sweep(&mu, &nu, SeparationInterval::new(-1.0, 1.0).unwrap(), DEFAULT_TOL).unwrap();
        assert_eq!(sol.coupling.len(), 4);
        assert_eq!(sol.maps.rows[0].s, -3.0);
        assert_eq!(sol.maps.rows[0].t, 2.0);
    }

    #[test]
    fn detects_widest_separating_interval() {
        let mu = m(&[(-0.5, 0.5), (0.5, 0.5)]);
        let nu = m(&[(-3.0, 0.25), (-2.0, 0.25), (2.0, 0.25), (3.0, 0.25)]);
        assert_eq!(detect_separation(&mu, &nu), Some(SeparationInterval { a: -2.0, b: 2.0 }));
        let overlapping = m(&[(-2.0, 0.5), (0.0, 0.25), (2.0, 0.25)]);
        assert_eq!(detect_separation(&mu, &overlapping), None);
    }

    #[test]
    fn symmetric_solve_checks_inputs() {
        let mu = m(&[(-0.5, 0.5), (0.5, 0.5)]);
        let nu = m(&[(-2.0, 0.5), (2.0, 0.5)]);
        let interval = SeparationInterval::new(-1.0, 1.0).unwrap();
        let sol = symmetric_solve(&mu, &nu, interval).unwrap();
        assert!(sol.coupling.entrywise_distance(&sol.coupling.reflected()) < 1e-15);

        let shifted = mu.map_points(|p| vec![p[0] + 0.1]).unwrap();
        assert!(matches!(symmetric_solve(&shifted, &nu, interval), Err(MotError::InvalidInput(_))));
    }

    #[test]
    fn cost_spec_ranges() {
        assert!(CostSpec::new(1.0).is_ok());
        assert!(CostSpec::new(1.5).is_err());
        assert!(CostSpec::new(0.0).is_err());
        assert!(CostSpec::relaxed(1.5).is_ok());
        assert_abs_diff_eq!(CostSpec::new(0.5).unwrap().eval(4.0), 2.0);
    }
}
