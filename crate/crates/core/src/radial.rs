//! Radially symmetric marginals in `R^d`.
//!
//! A radial law with density `f(|x|)` induces the even density
//! `g(r) = (|S^{d-1}| / 2) f(|r|) |r|^{d-1}` on the line, i.e. the law of the
//! signed radius along a uniformly random line through the origin. Optimal
//! plans between radial marginals move every `x` along its own line
//! `L_x = {a x}`, so the `d`-dimensional problem reduces to the symmetric
//! problem between the induced laws, and a 1-D coupling of signed radii
//! lifts back by drawing a uniform direction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::coupling::{euclidean, Coupling};
use crate::error::{MotError, Result};
use crate::lp::{solve_lp, LpStatus, Sense};
use crate::measures::{
    cell_edges, common_mass_split, convex_order_check, quantize, DiscreteMeasure, GridDensity, POSITION_TOL,
};
use crate::mot1d::{detect_separation, solve_sweep, symmetric_solve, CostSpec, SeparationInterval, TransportMaps, DEFAULT_TOL};

/// Tolerance of the post-quantization convex-order check.
pub const INDUCED_ORDER_TOL: f64 = 1e-8;

/// Surface area of the unit sphere in `R^d`.
pub fn sphere_area(d: usize) -> f64 {
    use std::f64::consts::PI;
    match d {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (d as f64 - 2.0) * sphere_area(d - 2),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RadialLaw {
    /// Piecewise-constant density `f` on the radius grid `edges`
    /// (`edges[0] = 0`), `values[k]` on `[edges[k], edges[k + 1])`.
    Density { edges: Vec<f64>, values: Vec<f64> },
    /// Uniform measures on spheres: `(radius, mass)`.
    Shells { atoms: Vec<(f64, f64)> },
}

/// A radially symmetric measure on `R^dim`, `dim >= 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    dim: usize,
    law: RadialLaw,
}

impl RadialProfile {
    pub fn density(dim: usize, edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if edges.len() < 2 || edges.len() != values.len() + 1 {
            return Err(MotError::invalid("radial grid needs one more edge than values"));
        }
        if edges[0] != 0.0 {
            return Err(MotError::invalid("radial grid must start at r = 0"));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(MotError::invalid("radial grid must be strictly increasing"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(MotError::invalid(format!("invalid radial density value {bad}")));
        }
        let profile = Self {
            dim,
            law: RadialLaw::Density { edges, values },
        };
        if !(profile.total_mass() > 0.0) {
            return Err(MotError::invalid("radial density has zero mass"));
        }
        Ok(profile)
    }

    /// Uniform spheres. A sphere of radius zero is an atom at the origin,
    /// which is rejected: the reduction needs `mu({0}) = 0`.
    pub fn shells(dim: usize, atoms: Vec<(f64, f64)>) -> Result<Self> {
        check_dim(dim)?;
        if atoms.is_empty() {
            return Err(MotError::invalid("radial shell list is empty"));
        }
        for &(r, m) in &atoms {
            if r == 0.0 {
                return Err(MotError::invalid("atom at the origin: radial marginals must satisfy mu({0}) = 0"));
            }
            if !(r.is_finite() && r > 0.0) {
                return Err(MotError::invalid(format!("invalid shell radius {r}")));
            }
            if !(m.is_finite() && m > 0.0) {
                return Err(MotError::invalid(format!("invalid shell mass {m}")));
            }
        }
        Ok(Self {
            dim,
            law: RadialLaw::Shells { atoms },
        })
    }

    /// Uniform probability on the ball of the given radius.
    pub fn uniform_ball(dim: usize, radius: f64) -> Result<Self> {
        let volume = sphere_area(dim) * radius.powi(dim as i32) / dim as f64;
        Self::density(dim, vec![0.0, radius], vec![1.0 / volume])
    }

    /// Uniform probability on the annulus `inner <= |x| <= outer`.
    pub fn uniform_annulus(dim: usize, inner: f64, outer: f64) -> Result<Self> {
        if !(inner > 0.0 && outer > inner) {
            return Err(MotError::invalid("annulus needs 0 < inner < outer"));
        }
        let volume = sphere_area(dim) * (outer.powi(dim as i32) - inner.powi(dim as i32)) / dim as f64;
        Self::density(dim, vec![0.0, inner, outer], vec![0.0, 1.0 / volume])
    }

    /// Uniform probability on the sphere of the given radius.
    pub fn sphere(dim: usize, radius: f64) -> Result<Self> {
        Self::shells(dim, vec![(radius, 1.0)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn law(&self) -> &RadialLaw {
        &self.law
    }

    pub fn max_radius(&self) -> f64 {
        match &self.law {
            RadialLaw::Density { edges, .. } => *edges.last().unwrap(),
            RadialLaw::Shells { atoms } => atoms.iter().map(|(r, _)| *r).fold(0.0, f64::max),
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.annulus_mass(0.0, f64::INFINITY)
    }

    /// Mass of `{r0 <= |x| < r1}`.
    pub fn annulus_mass(&self, r0: f64, r1: f64) -> f64 {
        match &self.law {
            RadialLaw::Density { .. } => sphere_area(self.dim) * self.radial_integral(r0, r1),
            RadialLaw::Shells { atoms } => atoms
                .iter()
                .filter(|(r, _)| r0 <= *r && *r < r1)
                .map(|(_, m)| m)
                .sum(),
        }
    }

    /// `int_{u0}^{u1} f(u) u^{d-1} du` for a density profile.
    fn radial_integral(&self, u0: f64, u1: f64) -> f64 {
        let RadialLaw::Density { edges, values } = &self.law else {
            return 0.0;
        };
        let d = self.dim as i32;
        edges
            .windows(2)
            .zip(values)
            .filter(|(_, v)| **v > 0.0)
            .map(|(w, v)| {
                let lo = w[0].max(u0);
                let hi = w[1].min(u1);
                if hi > lo {
                    v * (hi.powi(d) - lo.powi(d)) / d as f64
                } else {
                    0.0
                }
            })
            .sum()
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(MotError::invalid("radial profiles need dimension at least 2"));
    }
    Ok(())
}

/// Induced even density on `[-R, R]`, as exact cell averages over `n` cells.
pub fn induce_1d(rp: &RadialProfile, n: usize) -> Result<GridDensity> {
    if n < 2 {
        return Err(MotError::invalid("need at least two cells"));
    }
    if !matches!(rp.law, RadialLaw::Density { .. }) {
        return Err(MotError::invalid("only density profiles induce a grid density"));
    }
    let radius = rp.max_radius();
    let half_area = 0.5 * sphere_area(rp.dim);
    let width = 2.0 * radius / n as f64;
    let values = (0..n)
        .map(|i| {
            let (c0, c1) = cell_edges(-radius, radius, n, i);
            let integral = if c1 <= 0.0 {
                rp.radial_integral(-c1, -c0)
            } else if c0 >= 0.0 {
                rp.radial_integral(c0, c1)
            } else {
                rp.radial_integral(0.0, -c0) + rp.radial_integral(0.0, c1)
            };
            half_area * integral / width
        })
        .collect();
    GridDensity::new(-radius, radius, values)
}

/// Induced symmetric marginal on the line as atoms: quantized density
/// profiles (`n` cells) or half of every shell at each of `±r`.
pub fn induced_measure(rp: &RadialProfile, n: usize) -> Result<DiscreteMeasure> {
    match &rp.law {
        RadialLaw::Density { .. } => quantize(&induce_1d(rp, n)?, false),
        RadialLaw::Shells { atoms } => {
            let pairs: Vec<(f64, f64)> = atoms.iter().flat_map(|&(r, m)| [(-r, 0.5 * m), (r, 0.5 * m)]).collect();
            DiscreteMeasure::from_1d(&pairs)
        }
    }
}

/// A `d`-dimensional plan kept in signed-radius form.
///
/// The plan draws `u` uniformly on the unit sphere and a pair `(r, s)` from
/// the base coupling, and moves `r u` to `s u`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedCoupling {
    base: Coupling,
    dim: usize,
}

impl LiftedCoupling {
    pub fn new(base: Coupling, dim: usize) -> Result<Self> {
        if base.dim() != 1 {
            return Err(MotError::invalid("lifted plans need a one-dimensional base coupling"));
        }
        check_dim(dim)?;
        Ok(Self { base, dim })
    }

    pub fn base(&self) -> &Coupling {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cost evaluated in `R^d`, placing every base pair on the diagonal
    /// direction `(1, ..., 1) / sqrt(d)`. Any direction gives the same value.
    pub fn cost(&self, p: f64) -> f64 {
        let u = vec![1.0 / (self.dim as f64).sqrt(); self.dim];
        self.base
            .entries()
            .iter()
            .map(|e| {
                let x: Vec<f64> = u.iter().map(|c| c * e.x[0]).collect();
                let y: Vec<f64> = u.iter().map(|c| c * e.y[0]).collect();
                e.mass * euclidean(&x, &y).powf(p)
            })
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolvePath {
    Sweep,
    Lp,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialSolution {
    pub lifted: LiftedCoupling,
    pub cost_1d: f64,
    pub cost_nd: f64,
    pub path: SolvePath,
    pub interval: Option<SeparationInterval>,
    pub maps: Option<TransportMaps>,
    pub mu_induced: DiscreteMeasure,
    pub nu_induced: DiscreteMeasure,
}

/// Solves the radial problem through its induced 1-D marginals.
///
/// The common mass of the quantized marginals stays on the diagonal; the
/// rest goes through the sweep when an interval separates it and through
/// the LP oracle otherwise.
pub fn solve_radial(mu: &RadialProfile, nu: &RadialProfile, p: f64, n: usize) -> Result<RadialSolution> {
    if mu.dim != nu.dim {
        return Err(MotError::invalid("radial marginals live in different dimensions"));
    }
    let p = CostSpec::new(p)?.p();
    let mu_induced = induced_measure(mu, n)?;
    let nu_induced = induced_measure(nu, n)?;

    let report = convex_order_check(&mu_induced, &nu_induced, INDUCED_ORDER_TOL)?;
    if !report.in_order {
        return Err(report.into_error());
    }

    let split = common_mass_split(&mu_induced, &nu_induced)?;
    let mut base = Coupling::diagonal(&split.common);
    let (path, interval, maps) = if split.mu_bar.is_empty() {
        (SolvePath::Sweep, None, None)
    } else if let Some(interval) = detect_separation(&split.mu_bar, &split.nu_bar) {
        let solution = if split.mu_bar.is_symmetric(1e-9) && split.nu_bar.is_symmetric(1e-9) {
            symmetric_solve(&split.mu_bar, &split.nu_bar, interval)?
        } else {
            solve_sweep(&split.mu_bar, &split.nu_bar, interval, DEFAULT_TOL)?
        };
        base.extend(&solution.coupling)?;
        (SolvePath::Sweep, Some(interval), Some(solution.maps))
    } else {
        let solution = solve_lp(&split.mu_bar, &split.nu_bar, p, Sense::Min)?;
        match solution.status {
            LpStatus::Optimal => base.extend(&solution.coupling)?,
            LpStatus::Infeasible => return Err(MotError::Infeasible),
            LpStatus::NumericalFailure => {
                return Err(MotError::solver("LP oracle failed on the induced marginals", solution.residual))
            }
        }
        (SolvePath::Lp, None, None)
    };

    let lifted = LiftedCoupling::new(base, mu.dim)?;
    Ok(RadialSolution {
        cost_1d: lifted.base.cost(p),
        cost_nd: lifted.cost(p),
        lifted,
        path,
        interval,
        maps,
        mu_induced,
        nu_induced,
    })
}

/// Draws `count` pairs `(X, Y)` from the lifted plan; deterministic in `seed`.
pub fn sample_lifted(lc: &LiftedCoupling, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let entries = lc.base.entries();
    if entries.is_empty() {
        return Vec::new();
    }
    let mut cumulative = Vec::with_capacity(entries.len());
    let mut total = 0.0;
    for e in entries {
        total += e.mass;
        cumulative.push(total);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u = random_direction(&mut rng, lc.dim);
            let target = rng.random::<f64>() * total;
            let k = cumulative.partition_point(|c| *c <= target).min(entries.len() - 1);
            let (r, s) = (entries[k].x[0], entries[k].y[0]);
            (u.iter().map(|c| c * r).collect(), u.iter().map(|c| c * s).collect())
        })
        .collect()
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|c| c / norm).collect();
        }
    }
}

/// Monte Carlo check of a lifted plan against its source law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MonteCarloSummary {
    pub samples: usize,
    /// Per-coordinate mean of `Y - X`.
    pub mean_step: Vec<f64>,
    /// Per-coordinate standard error of that mean.
    pub std_error: Vec<f64>,
    /// Largest `|mean| / std_error` over coordinates.
    pub max_z: f64,
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Samples the lifted plan and compares annulus counts of `|X|` with
/// `expected` masses on the annuli `[edges[i], edges[i + 1])` (chi-square),
/// and the mean of `Y - X` with zero.
///
/// Adjacent annuli are pooled until each expects at least five samples.
pub fn monte_carlo_check(
    lc: &LiftedCoupling,
    edges: &[f64],
    expected: &[f64],
    count: usize,
    seed: u64,
) -> Result<MonteCarloSummary> {
    if edges.len() != expected.len() + 1 || expected.is_empty() {
        return Err(MotError::invalid("need one expected mass per annulus"));
    }
    if count < 2 {
        return Err(MotError::invalid("need at least two samples"));
    }
    let samples = sample_lifted(lc, count, seed);
    let dim = lc.dim;

    let mut sum = vec![0.0; dim];
    let mut sum_sq = vec![0.0; dim];
    let mut observed = vec![0usize; expected.len()];
    for (x, y) in &samples {
        for k in 0..dim {
            let step = y[k] - x[k];
            sum[k] += step;
            sum_sq[k] += step * step;
        }
        let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
        if let Some(bin) = (0..expected.len()).find(|&i| edges[i] <= r && r < edges[i + 1]) {
            observed[bin] += 1;
        }
    }
    let nf = count as f64;
    let mean_step: Vec<f64> = sum.iter().map(|s| s / nf).collect();
    let std_error: Vec<f64> = sum_sq
        .iter()
        .zip(&mean_step)
        .map(|(sq, mean)| ((sq / nf - mean * mean).max(0.0) * nf / (nf - 1.0) / nf).sqrt())
        .collect();
    let max_z = mean_step
        .iter()
        .zip(&std_error)
        .map(|(m, se)| if *se > 0.0 { m.abs() / se } else if *m == 0.0 { 0.0 } else { f64::INFINITY })
        .fold(0.0, f64::max);

    let total: f64 = expected.iter().sum();
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (e, o) in expected.iter().zip(&observed) {
        acc.0 += e / total * nf;
        acc.1 += *o as f64;
        if acc.0 >= 5.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.0 > 0.0 || acc.1 > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += acc.0;
                last.1 += acc.1;
            }
            None => pooled.push(acc),
        }
    }
    let chi_square: f64 = pooled.iter().map(|(e, o)| (o - e) * (o - e) / e).sum();
    let dof = pooled.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        let dist = ChiSquared::new(dof as f64).map_err(|e| MotError::invalid(e.to_string()))?;
        1.0 - dist.cdf(chi_square)
    };

    Ok(MonteCarloSummary {
        samples: count,
        mean_step,
        std_error,
        max_z,
        chi_square,
        dof,
        p_value,
    })
}

/// A real orthogonal matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl OrthogonalMatrix {
    /// Checks `M^T M = I` entrywise within `1e-12`.
    pub fn new(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.len() != dim * dim {
            return Err(MotError::invalid("matrix shape does not match the dimension"));
        }
        for i in 0..dim {
            for j in 0..dim {
                let dot: f64 = (0..dim).map(|k| data[k * dim + i] * data[k * dim + j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot - target).abs() > 1e-12 {
                    return Err(MotError::invalid("matrix is not orthogonal"));
                }
            }
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn rotation_2d(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            dim: 2,
            data: vec![c, -s, s, c],
        }
    }

    /// Reflection of the plane across the line spanned by `direction`.
    pub fn reflection_2d(direction: [f64; 2]) -> Result<Self> {
        let norm = direction[0].hypot(direction[1]);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(MotError::invalid("line direction must be a nonzero vector"));
        }
        let (u, v) = (direction[0] / norm, direction[1] / norm);
        Ok(Self {
            dim: 2,
            data: vec![2.0 * u * u - 1.0, 2.0 * u * v, 2.0 * u * v, 2.0 * v * v - 1.0],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|k| self.data[i * self.dim + k] * v[k]).sum())
            .collect()
    }
}

/// Push-forward of a plan under `(x, y) -> (M x, M y)`.
pub fn rotate_pushforward(pi: &Coupling, m: &OrthogonalMatrix) -> Result<Coupling> {
    if pi.dim() != m.dim {
        return Err(MotError::invalid("matrix and coupling dimensions differ"));
    }
    let mut out = Coupling::new(pi.dim());
    for e in pi.entries() {
        out.push(m.apply(&e.x), m.apply(&e.y), e.mass)?;
    }
    Ok(out)
}

/// Average of a planar plan over the `n` rotations by multiples of `2 pi / n`.
pub fn rotation_average_2d(pi: &Coupling, n: usize) -> Result<Coupling> {
    if pi.dim() != 2 || n == 0 {
        return Err(MotError::invalid("rotation averaging needs a planar plan and n >= 1"));
    }
    let mut out = Coupling::new(2);
    for k in 0..n {
        let rotated = rotate_pushforward(pi, &OrthogonalMatrix::rotation_2d(std::f64::consts::TAU * k as f64 / n as f64))?;
        for e in rotated.entries() {
            out.push(e.x.clone(), e.y.clone(), e.mass / n as f64)?;
        }
    }
    Ok(out.canonical())
}

/// Masses of `m` on the annuli `[edges[i], edges[i + 1])`.
pub fn annulus_masses(m: &DiscreteMeasure, edges: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; edges.len().saturating_sub(1)];
    for (p, mass) in m.atoms() {
        let r = p.iter().map(|c| c * c).sum::<f64>().sqrt();
        if let Some(i) = (0..out.len()).find(|&i| edges[i] <= r && r < edges[i + 1]) {
            out[i] += mass;
        }
    }
    out
}

/// Sorted `(|x|, mass)` pairs with equal radii merged.
fn radius_law(m: &DiscreteMeasure) -> Vec<(f64, f64)> {
    let mut radii: Vec<(f64, f64)> = m
        .atoms()
        .map(|(p, mass)| (p.iter().map(|c| c * c).sum::<f64>().sqrt(), mass))
        .collect();
    radii.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(radii.len());
    for (r, mass) in radii {
        match out.last_mut() {
            Some(last) if (last.0 - r).abs() <= POSITION_TOL => last.1 += mass,
            _ => out.push((r, mass)),
        }
    }
    out
}

/// R-equivalence with mass tolerance `1e-9`.
pub fn r_equivalent(phi: &DiscreteMeasure, psi: &DiscreteMeasure, edges: &[f64]) -> bool {
    r_equivalent_with_tol(phi, psi, edges, 1e-9)
}

/// Same mass on every annulus of `edges` and the same law of `|x|`.
pub fn r_equivalent_with_tol(phi: &DiscreteMeasure, psi: &DiscreteMeasure, edges: &[f64], tol: f64) -> bool {
    if phi.dim() != psi.dim() {
        return false;
    }
    let annuli_match = annulus_masses(phi, edges)
        .iter()
        .zip(annulus_masses(psi, edges))
        .all(|(a, b)| (a - b).abs() <= tol);
    let (ra, rb) = (radius_law(phi), radius_law(psi));
    annuli_match
        && ra.len() == rb.len()
        && ra
            .iter()
            .zip(&rb)
            .all(|(a, b)| (a.0 - b.0).abs() <= POSITION_TOL && (a.1 - b.1).abs() <= tol)
}

/// Average of a planar measure with its mirror image across the line
/// spanned by `direction`.
pub fn l_symmetrize_2d(phi: &DiscreteMeasure, direction: [f64; 2]) -> Result<DiscreteMeasure> {
    if phi.dim() != 2 {
        return Err(MotError::invalid("L-symmetrization is implemented in the plane"));
    }
    let reflection = OrthogonalMatrix::reflection_2d(direction)?;
    let half = phi.scaled(0.5)?;
    half.plus(&half.map_points(|p| reflection.apply(p))?)
}

/// `sum mass * |x - y|^p` over the atoms `y` of `phi`.
pub fn point_cost(phi: &DiscreteMeasure, x: &[f64], p: f64) -> f64 {
    phi.atoms().map(|(y, m)| m * euclidean(x, y).powf(p)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn sphere_areas() {
        assert_abs_diff_eq!(sphere_area(2), 2.0 * PI);
        assert_abs_diff_eq!(sphere_area(3), 4.0 * PI, epsilon = 1e-14);
        assert_abs_diff_eq!(sphere_area(4), 2.0 * PI * PI, epsilon = 1e-13);
    }

    #[test]
    fn disk_induces_absolute_value() {
        let disk = RadialProfile::density(2, vec![0.0, 1.0], vec![1.0 / PI]).unwrap();
        let g = induce_1d(&disk, 50).unwrap();
        assert_abs_diff_eq!(g.total_mass(), 1.0, epsilon = 1e-12);
        for i in 0..g.n() {
            // Average of |r| over the cell.
            let (a, b) = cell_edges(-1.0, 1.0, 50, i);
            let exact = (b * b.abs() - a * a.abs()) / 2.0 / (b - a);
            assert_abs_diff_eq!(g.values()[i], exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn induced_density_is_even() {
        let p = RadialProfile::density(3, vec![0.0, 0.3, 1.1, 2.0], vec![0.2, 0.05, 0.01]).unwrap();
        let g = induce_1d(&p, 37).unwrap();
        let n = g.n();
        for i in 0..n {
            assert_eq!(g.values()[i], g.values()[n - 1 - i]);
        }
        assert_abs_diff_eq!(g.total_mass(), p.total_mass(), epsilon = 1e-12);
    }

    #[test]
    fn shells_split_evenly_and_reject_origin() {
        let s = RadialProfile::sphere(2, 2.0).unwrap();
        let m = induced_measure(&s, 10).unwrap();
        assert_eq!(m.atoms_1d().collect::<Vec<_>>(), vec![(-2.0, 0.5), (2.0, 0.5)]);
        assert!(RadialProfile::shells(2, vec![(0.0, 1.0)]).is_err());
        assert!(RadialProfile::density(1, vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn orthogonality_is_checked() {
        assert!(OrthogonalMatrix::new(2, vec![1.0, 0.0, 0.0, 2.0]).is_err());
        let r = OrthogonalMatrix::rotation_2d(0.3);
        assert!(OrthogonalMatrix::new(2, r.data.clone()).is_ok());
        assert!(OrthogonalMatrix::reflection_2d([0.0, 0.0]).is_err());
    }

    #[test]
    fn quarter_turn_rotates_entries() {
        let pi = Coupling::from_1d(&[]).unwrap();
        assert!(rotate_pushforward(&pi, &OrthogonalMatrix::rotation_2d(1.0)).is_err());

        let mut pi = Coupling::new(2);
        pi.push(vec![1.0, 0.0], vec![2.0, 0.0], 0.5).unwrap();
        pi.push(vec![0.0, 1.0], vec![0.0, 3.0], 0.25).unwrap();
        pi.push(vec![1.0, 1.0], vec![-1.0, 2.0], 0.25).unwrap();
        let rotated = rotate_pushforward(&pi, &OrthogonalMatrix::rotation_2d(PI / 2.0)).unwrap();
        let expected = [([0.0, 1.0], [0.0, 2.0]), ([-1.0, 0.0], [-3.0, 0.0]), ([-1.0, 1.0], [-2.0, -1.0])];
        for (e, (x, y)) in rotated.entries().iter().zip(expected) {
            for k in 0..2 {
                assert_abs_diff_eq!(e.x[k], x[k], epsilon = 1e-15);
                assert_abs_diff_eq!(e.y[k], y[k], epsilon = 1e-15);
            }
        }
        let same = rotate_pushforward(&pi, &OrthogonalMatrix::identity(2)).unwrap();
        assert_eq!(same, pi);
    }

    #[test]
    fn reflection_across_axis() {
        let phi = DiscreteMeasure::from_points(2, &[(vec![1.0, 1.0], 1.0)]).unwrap();
        let sym = l_symmetrize_2d(&phi, [1.0, 0.0]).unwrap();
        let expected = DiscreteMeasure::from_points(2, &[(vec![1.0, 1.0], 0.5), (vec![1.0, -1.0], 0.5)]).unwrap();
        assert_eq!(sym, expected);
        assert_eq!(l_symmetrize_2d(&expected, [3.0, 0.0]).unwrap(), expected);

        let x = [2.0, 0.0];
        assert_abs_diff_eq!(point_cost(&phi, &x, 1.0), 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(point_cost(&sym, &x, 1.0), 2f64.sqrt(), epsilon = 1e-15);
        assert!(l_symmetrize_2d(&phi, [0.0, 0.0]).is_err());
    }

    #[test]
    fn r_equivalence_examples() {
        let phi = DiscreteMeasure::from_points(2, &[(vec![1.0, 0.0], 1.0)]).unwrap();
        let psi = DiscreteMeasure::from_points(2, &[(vec![0.0, 2.0], 1.0)]).unwrap();
        let edges = [0.0, 0.5, 1.5, 2.5];
        assert!(!r_equivalent(&phi, &psi, &edges));
        let rotated = phi.map_points(|p| OrthogonalMatrix::rotation_2d(0.7).apply(p)).unwrap();
        assert!(r_equivalent(&phi, &rotated, &edges));
    }
}
