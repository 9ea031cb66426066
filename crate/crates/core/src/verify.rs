//! Structural checks on transport plans.

use serde::Serialize;

use crate::coupling::Coupling;
use crate::error::{MotError, Result};
use crate::measures::DiscreteMeasure;
use crate::mot1d::TransportMaps;

/// Default mass threshold below which entries are ignored by the detector.
pub const FORBIDDEN_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Pattern {
    /// `y- < x' < x <= y'`
    A,
    /// `y' <= x < x' < y+`
    B,
}

/// Row `x` sends mass to `y_minus < y_plus`, row `x_prime` sends mass to
/// `y_prime` strictly between them, and the sources sit in one of the two
/// patterns that a cheaper competitor rules out.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ForbiddenConfig {
    pub x: f64,
    pub y_minus: f64,
    pub y_plus: f64,
    pub x_prime: f64,
    pub y_prime: f64,
    pub pattern: Pattern,
}

pub fn classify(x: f64, y_minus: f64, y_plus: f64, x_prime: f64, y_prime: f64) -> Option<Pattern> {
    if !(y_minus < y_prime && y_prime < y_plus) {
        return None;
    }
    if y_minus < x_prime && x_prime < x && x <= y_prime {
        Some(Pattern::A)
    } else if y_prime <= x && x < x_prime && x_prime < y_plus {
        Some(Pattern::B)
    } else {
        None
    }
}

/// Every forbidden configuration in the support of a 1-D plan, ignoring
/// entries of mass at most `tol`.
pub fn detect_forbidden(pi: &Coupling, tol: f64) -> Result<Vec<ForbiddenConfig>> {
    if pi.dim() != 1 {
        return Err(MotError::invalid("forbidden configurations are defined for 1-D plans"));
    }
    let rows: Vec<(f64, Vec<f64>)> = pi
        .rows()
        .into_iter()
        .map(|row| {
            let ys = row.targets.iter().filter(|(_, m)| *m > tol).map(|(y, _)| y[0]).collect();
            (row.x[0], ys)
        })
        .filter(|(_, ys): &(f64, Vec<f64>)| !ys.is_empty())
        .collect();

    let mut found = Vec::new();
    for (x, ys) in rows.iter().filter(|(_, ys)| ys.len() >= 2) {
        for (i, &y_minus) in ys.iter().enumerate() {
            for &y_plus in &ys[i + 1..] {
                for (x_prime, targets) in &rows {
                    if x_prime == x {
                        continue;
                    }
                    for &y_prime in targets {
                        if let Some(pattern) = classify(*x, y_minus, y_plus, *x_prime, y_prime) {
                            found.push(ForbiddenConfig {
                                x: *x,
                                y_minus,
                                y_plus,
                                x_prime: *x_prime,
                                y_prime,
                                pattern,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(found)
}

/// Cost of `t d(x, y-) + (1 - t) d(x, y+) + d(x', y')` minus the cost of the
/// competitor `t d(x', y-) + (1 - t) d(x', y+) + d(x, y')`, where
/// `t y- + (1 - t) y+ = y'`. Both plans have the same marginals and
/// barycenters; a positive value means the swap is strictly cheaper.
pub fn swap_gain(x: f64, y_minus: f64, y_plus: f64, x_prime: f64, y_prime: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(MotError::invalid(format!("cost exponent must lie in (0, 1], got {p}")));
    }
    if [x, y_minus, y_plus, x_prime, y_prime].iter().any(|v| !v.is_finite()) {
        return Err(MotError::invalid("swap parameters must be finite"));
    }
    let t = (y_plus - y_prime) / (y_plus - y_minus);
    if !(y_minus < y_prime && y_prime < y_plus) || !(t > 0.0 && t < 1.0) {
        return Err(MotError::invalid("swap needs y- < y' < y+"));
    }
    let g = |z: f64| t * (z - y_minus).abs().powf(p) + (1.0 - t) * (z - y_plus).abs().powf(p) - (z - y_prime).abs().powf(p);
    Ok(g(x) - g(x_prime))
}

/// Whether `S` and `T` are nonincreasing along the rows. A repeated value is
/// accepted only when the earlier row left that atom partly unconsumed.
pub fn check_decreasing(maps: &TransportMaps) -> bool {
    maps.rows.windows(2).all(|w| {
        let (r1, r2) = (&w[0], &w[1]);
        let lower_ok = r2.s < r1.s || (r2.s == r1.s && r1.lambda_minus < 1.0);
        let upper_ok = r2.t < r1.t || (r2.t == r1.t && r1.lambda_plus < 1.0);
        r1.x < r2.x && lower_ok && upper_ok
    })
}

/// The planar configuration deformed in the radial argument: a source at
/// `(0, b)` and a target law on the circle of radius `r` with barycenter
/// `(0, z)`, initially split evenly between `(±a, z)`. Along `t`, the north
/// pair `(±a_n, z + t (r - z))` and the south pair `(±a_s, z - t (r + z))`
/// carry masses `(r + z) / 2r` and `(r - z) / 2r`, and the cost profile is
/// `h(s) = s^q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeformationInstance {
    pub b: f64,
    pub r: f64,
    pub z: f64,
    pub q: f64,
}

impl DeformationInstance {
    pub fn new(b: f64, r: f64, z: f64, q: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(MotError::invalid(format!("circle radius must be positive, got {r}")));
        }
        if !(z.abs() < r) {
            return Err(MotError::invalid(format!("need |z| < r, got z = {z}, r = {r}")));
        }
        if !(b != 0.0 && b.is_finite()) {
            return Err(MotError::invalid("source height must be nonzero"));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(MotError::invalid(format!("profile exponent must be positive, got {q}")));
        }
        Ok(Self { b, r, z, q })
    }

    /// Initial half-width, `a^2 + z^2 = r^2`.
    pub fn a(&self) -> f64 {
        (self.r * self.r - self.z * self.z).sqrt()
    }

    fn heights(&self, t: f64) -> (f64, f64) {
        (self.z + t * (self.r - self.z), self.z - t * (self.r + self.z))
    }

    fn weights(&self) -> (f64, f64) {
        ((self.r + self.z) / (2.0 * self.r), (self.r - self.z) / (2.0 * self.r))
    }

    /// The four support points at time `t`: north pair, then south pair.
    pub fn points(&self, t: f64) -> [[f64; 2]; 4] {
        let (zn, zs) = self.heights(t);
        let half = |h: f64| (self.r * self.r - h * h).max(0.0).sqrt();
        let (an, as_) = (half(zn), half(zs));
        [[an, zn], [-an, zn], [as_, zs], [-as_, zs]]
    }

    /// The target law at time `t` as a planar measure.
    pub fn measure_at(&self, t: f64) -> Result<DiscreteMeasure> {
        let (wn, ws) = self.weights();
        let pts = self.points(t);
        let atoms: Vec<(Vec<f64>, f64)> = pts
            .iter()
            .zip([wn, wn, ws, ws])
            .map(|(p, w)| (p.to_vec(), 0.5 * w))
            .collect();
        DiscreteMeasure::from_points(2, &atoms)
    }

    /// `C(t)`, the expected cost from the source.
    pub fn cost(&self, t: f64) -> f64 {
        let (zn, zs) = self.heights(t);
        let (wn, ws) = self.weights();
        let base = self.r * self.r + self.b * self.b;
        let dn = (base - 2.0 * self.b * zn).max(0.0).sqrt();
        let ds = (base - 2.0 * self.b * zs).max(0.0).sqrt();
        wn * dn.powf(self.q) + ws * ds.powf(self.q)
    }

    /// `C'(t)` in closed form.
    pub fn slope(&self, t: f64) -> f64 {
        let (zn, zs) = self.heights(t);
        let base = self.r * self.r + self.b * self.b;
        let dn = (base - 2.0 * self.b * zn).max(0.0).sqrt();
        let ds = (base - 2.0 * self.b * zs).max(0.0).sqrt();
        let k = (self.r + self.z) * (self.r - self.z) / (2.0 * self.r);
        -self.b * self.q * k * (dn.powf(self.q - 2.0) - ds.powf(self.q - 2.0))
    }
}

/// `(t, C(t))` on `grid` equally spaced points of `[0, 1]`.
pub fn deformation_curve(inst: &DeformationInstance, grid: usize) -> Result<Vec<(f64, f64)>> {
    if grid < 2 {
        return Err(MotError::invalid("deformation grid needs at least two points"));
    }
    Ok((0..grid)
        .map(|i| {
            let t = i as f64 / (grid - 1) as f64;
            (t, inst.cost(t))
        })
        .collect())
}

/// Largest forward difference of a curve.
pub fn max_forward_difference(curve: &[(f64, f64)]) -> f64 {
    curve.windows(2).map(|w| w[1].1 - w[0].1).fold(f64::NEG_INFINITY, f64::max)
}

/// Marginal and barycenter residuals of a plan.
///
/// Marginal residuals are L1 distances between the plan's marginals and
/// `mu`, `nu`; the barycenter residual is the largest
/// `|sum_y (y - x) pi(x, y)|` over rows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CouplingResiduals {
    pub row_marginal: f64,
    pub column_marginal: f64,
    pub barycenter: f64,
    pub tol: f64,
}

impl CouplingResiduals {
    pub fn max(&self) -> f64 {
        self.row_marginal.max(self.column_marginal).max(self.barycenter)
    }

    pub fn is_clean(&self) -> bool {
        self.max() <= self.tol
    }
}

pub fn validate_coupling(pi: &Coupling, mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> Result<CouplingResiduals> {
    if mu.dim() != nu.dim() || (!pi.is_empty() && pi.dim() != mu.dim()) {
        return Err(MotError::invalid("coupling and marginals have different dimensions"));
    }
    let barycenter = pi
        .rows()
        .iter()
        .map(|row| {
            let mass = row.mass();
            row.first_moment()
                .iter()
                .zip(&row.x)
                .map(|(m, x)| (m - mass * x).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max);
    let (source, target) = if pi.is_empty() {
        (DiscreteMeasure::empty(mu.dim()), DiscreteMeasure::empty(mu.dim()))
    } else {
        (pi.source_marginal(), pi.target_marginal())
    };
    Ok(CouplingResiduals {
        row_marginal: l1_distance(&source, mu),
        column_marginal: l1_distance(&target, nu),
        barycenter,
        tol,
    })
}

fn l1_distance(a: &DiscreteMeasure, b: &DiscreteMeasure) -> f64 {
    let mut total = 0.0;
    for (p, m) in a.atoms() {
        total += (m - b.mass_at(p)).abs();
    }
    for (p, m) in b.atoms() {
        if a.mass_at(p) == 0.0 {
            total += m;
        }
    }
    total
}

/// Report emitted by the `verify` command.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub forbidden: Vec<ForbiddenConfig>,
    pub residuals: Option<CouplingResiduals>,
    pub decreasing: Option<bool>,
    pub deformation: Vec<(f64, f64)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mot1d::MapRow;
    use approx::assert_abs_diff_eq;

    #[test]
    fn finds_pattern_a() {
        let pi = Coupling::from_1d(&[(0.0, -2.0, 0.25), (0.0, 2.0, 0.25), (-1.0, 1.0, 0.5)]).unwrap();
        let found = detect_forbidden(&pi, FORBIDDEN_TOL).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].pattern, Pattern::A);
        assert_eq!((found[0].x, found[0].x_prime, found[0].y_prime), (0.0, -1.0, 1.0));
    }

    #[test]
    fn ignores_light_entries() {
        let pi = Coupling::from_1d(&[(0.0, -2.0, 0.25), (0.0, 2.0, 1e-12), (-1.0, 1.0, 0.5)]).unwrap();
        assert!(detect_forbidden(&pi, FORBIDDEN_TOL).unwrap().is_empty());
    }

    #[test]
    fn swap_gain_examples() {
        assert_abs_diff_eq!(swap_gain(0.0, -2.0, 2.0, -1.0, 1.0, 1.0).unwrap(), 0.5, epsilon = 1e-15);
        assert_eq!(swap_gain(0.3, -2.0, 2.0, 0.3, 1.0, 0.5).unwrap(), 0.0);
        assert!(swap_gain(0.0, 1.0, 2.0, -1.0, 0.5, 1.0).is_err());
        assert!(swap_gain(0.0, -2.0, 2.0, -1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn decreasing_maps() {
        let row = |x, s, t, lm, lp| MapRow {
            x,
            s,
            t,
            lambda_minus: lm,
            lambda_plus: lp,
        };
        let single = TransportMaps {
            rows: vec![row(0.0, -1.0, 1.0, 1.0, 1.0)],
        };
        assert!(check_decreasing(&single));
        let good = TransportMaps {
            rows: vec![row(0.0, -1.0, 2.0, 0.5, 1.0), row(0.5, -1.0, 1.0, 1.0, 1.0)],
        };
        assert!(check_decreasing(&good));
        let rising = TransportMaps {
            rows: vec![row(0.0, -1.0, 1.0, 1.0, 1.0), row(0.5, -2.0, 2.0, 1.0, 1.0)],
        };
        assert!(!check_decreasing(&rising));
        let shared_exhausted = TransportMaps {
            rows: vec![row(0.0, -1.0, 2.0, 1.0, 1.0), row(0.5, -1.0, 1.0, 1.0, 1.0)],
        };
        assert!(!check_decreasing(&shared_exhausted));
    }

    #[test]
    fn deformation_hand_values() {
        let inst = DeformationInstance::new(0.5, 1.0, 0.0, 1.0).unwrap();
        let curve = deformation_curve(&inst, 101).unwrap();
        assert_abs_diff_eq!(curve[0].1, 1.25f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(curve[100].1, 1.0, epsilon = 1e-15);
        assert!(max_forward_difference(&curve) < 0.0);
    }

    #[test]
    fn deformation_points_stay_on_circle() {
        let inst = DeformationInstance::new(-0.7, 1.3, 0.4, 0.5).unwrap();
        for i in 0..=10 {
            let t = i as f64 / 10.0;
            for p in inst.points(t) {
                assert_abs_diff_eq!(p[0].hypot(p[1]), 1.3, epsilon = 1e-12);
            }
            let m = inst.measure_at(t).unwrap();
            assert_abs_diff_eq!(m.first_moment()[1], 0.4, epsilon = 1e-12);
            assert_abs_diff_eq!(m.first_moment()[0], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn slope_matches_finite_differences() {
        let inst = DeformationInstance::new(0.9, 1.2, -0.3, 1.5).unwrap();
        for i in 1..10 {
            let t = i as f64 / 10.0;
            let h = 1e-6;
            let fd = (inst.cost(t + h) - inst.cost(t - h)) / (2.0 * h);
            assert_abs_diff_eq!(inst.slope(t), fd, epsilon = 1e-7);
        }
        assert_abs_diff_eq!(inst.slope(0.0), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn invalid_geometry_is_rejected() {
        assert!(DeformationInstance::new(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(DeformationInstance::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(DeformationInstance::new(1.0, -1.0, 0.0, 1.0).is_err());
        let inst = DeformationInstance::new(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!(deformation_curve(&inst, 1).is_err());
    }

    #[test]
    fn residuals_of_defective_plans() {
        let mu = DiscreteMeasure::dirac(0.0);
        let nu = DiscreteMeasure::from_1d(&[(-1.0, 0.5), (1.0, 0.5)]).unwrap();
        let good = Coupling::from_1d(&[(0.0, -1.0, 0.5), (0.0, 1.0, 0.5)]).unwrap();
        assert!(validate_coupling(&good, &mu, &nu, 1e-9).unwrap().is_clean());

        let bad = Coupling::from_1d(&[(0.0, -1.0, 0.501), (0.0, 1.0, 0.5)]).unwrap();
        let res = validate_coupling(&bad, &mu, &nu, 1e-9).unwrap();
        assert_abs_diff_eq!(res.row_marginal, 1e-3, epsilon = 1e-12);
        assert_abs_diff_eq!(res.barycenter, 1e-3, epsilon = 1e-12);
        assert!(!res.is_clean());

        let empty = Coupling::new(1);
        let res = validate_coupling(&empty, &mu, &nu, 1e-9).unwrap();
        assert_abs_diff_eq!(res.row_marginal, 1.0);
        assert_abs_diff_eq!(res.column_marginal, 1.0);
    }
}
