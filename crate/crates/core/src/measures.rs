//! Finite atomic measures, piecewise-constant densities and the
//! one-dimensional convex-order test.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{MotError, Result};

/// Two positions closer than this are treated as the same atom.
pub const POSITION_TOL: f64 = 1e-12;

/// Default mass tolerance.
pub const MASS_TOL: f64 = 1e-10;

/// Residual atoms lighter than this fraction of the original atom are
/// treated as rounding noise by [`common_mass_split`].
const SPLIT_DUST: f64 = 1e-12;

/// A finite atomic measure on `R^dim`.
///
/// Points are stored flat (`dim` coordinates per atom). In one dimension the
/// atoms are kept sorted by position; in every dimension atoms closer than
/// [`POSITION_TOL`] are merged on construction and every stored mass is
/// strictly positive.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    points: Vec<f64>,
    masses: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from flat coordinates and masses.
    ///
    /// Zero masses are dropped; negative or non-finite data is rejected.
    pub fn new(dim: usize, points: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(MotError::invalid("dimension must be positive"));
        }
        if points.len() != dim * masses.len() {
            return Err(MotError::invalid(format!(
                "expected {} coordinates for {} atoms in dimension {}, got {}",
                dim * masses.len(),
                masses.len(),
                dim,
                points.len()
            )));
        }
        if let Some(bad) = points.iter().find(|v| !v.is_finite()) {
            return Err(MotError::invalid(format!("non-finite position {bad}")));
        }
        if let Some(bad) = masses.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(MotError::invalid(format!("invalid atom mass {bad}")));
        }

        let mut atoms: Vec<(&[f64], f64)> = points
            .chunks_exact(dim)
            .zip(masses.iter().copied())
            .filter(|(_, m)| *m > 0.0)
            .collect();
        atoms.sort_by(|a, b| lex_cmp(a.0, b.0));

        let mut out_points: Vec<f64> = Vec::with_capacity(points.len());
        let mut out_masses: Vec<f64> = Vec::with_capacity(atoms.len());
        for (p, m) in atoms {
            // Matches can only sit in the trailing run close in the first coordinate.
            let k = out_masses.len();
            let same = (0..k)
                .rev()
                .take_while(|&j| p[0] - out_points[j * dim] <= POSITION_TOL)
                .find(|&j| close(&out_points[j * dim..(j + 1) * dim], p));
            match same {
                Some(j) => out_masses[j] += m,
                None => {
                    out_points.extend_from_slice(p);
                    out_masses.push(m);
                }
            }
        }
        Ok(Self {
            dim,
            points: out_points,
            masses: out_masses,
        })
    }

    /// One-dimensional measure from `(position, mass)` pairs.
    pub fn from_1d(atoms: &[(f64, f64)]) -> Result<Self> {
        let (points, masses) = atoms.iter().copied().unzip();
        Self::new(1, points, masses)
    }

    /// Measure in `R^dim` from `(point, mass)` pairs.
    pub fn from_points(dim: usize, atoms: &[(Vec<f64>, f64)]) -> Result<Self> {
        let mut points = Vec::with_capacity(dim * atoms.len());
        let mut masses = Vec::with_capacity(atoms.len());
        for (p, m) in atoms {
            if p.len() != dim {
                return Err(MotError::invalid(format!(
                    "point {p:?} does not have dimension {dim}"
                )));
            }
            points.extend_from_slice(p);
            masses.push(*m);
        }
        Self::new(dim, points, masses)
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            points: Vec::new(),
            masses: Vec::new(),
        }
    }

    pub fn dirac(x: f64) -> Self {
        Self {
            dim: 1,
            points: vec![x],
            masses: vec![1.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    /// Position of atom `i` of a one-dimensional measure.
    pub fn position(&self, i: usize) -> f64 {
        debug_assert_eq!(self.dim, 1);
        self.points[i * self.dim]
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `(position, mass)` pairs of a one-dimensional measure.
    pub fn atoms_1d(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points.iter().copied().zip(self.masses.iter().copied())
    }

    /// `(point, mass)` pairs.
    pub fn atoms(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points
            .chunks_exact(self.dim)
            .zip(self.masses.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().fold(0.0, |a, m| a + m)
    }

    /// Unnormalized first moment `sum_i m_i x_i`.
    pub fn first_moment(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (p, m) in self.atoms() {
            for (o, v) in out.iter_mut().zip(p) {
                *o += m * v;
            }
        }
        out
    }

    /// Mass carried by the atom at `point` (within [`POSITION_TOL`]).
    pub fn mass_at(&self, point: &[f64]) -> f64 {
        self.atoms()
            .find(|(p, _)| close(p, point))
            .map_or(0.0, |(_, m)| m)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.dim,
            self.points.clone(),
            self.masses.iter().map(|m| m * factor).collect(),
        )
    }

    /// Image under `x -> -x`.
    pub fn reflected(&self) -> Self {
        Self::new(
            self.dim,
            self.points.iter().map(|v| -v).collect(),
            self.masses.clone(),
        )
        .expect("reflection of a valid measure is valid")
    }

    /// Applies `f` to every point, merging atoms that collide.
    pub fn map_points(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut points = Vec::with_capacity(self.points.len());
        for p in self.points.chunks_exact(self.dim) {
            let q = f(p);
            if q.len() != self.dim {
                return Err(MotError::invalid("point map changed the dimension"));
            }
            points.extend(q);
        }
        Self::new(self.dim, points, self.masses.clone())
    }

    /// Sum of two measures on the same space.
    pub fn plus(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(MotError::invalid("cannot add measures of different dimension"));
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let mut masses = self.masses.clone();
        masses.extend_from_slice(&other.masses);
        Self::new(self.dim, points, masses)
    }

    /// Largest atomwise discrepancy to `other`, matching positions within
    /// [`POSITION_TOL`]. Atoms present on one side only count with full mass.
    pub fn max_mass_difference(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (p, m) in self.atoms() {
            worst = worst.max((m - other.mass_at(p)).abs());
        }
        for (p, m) in other.atoms() {
            worst = worst.max((m - self.mass_at(p)).abs());
        }
        worst
    }

    /// Whether the measure is invariant under `x -> -x` atomwise.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.max_mass_difference(&self.reflected()) <= tol
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

pub(crate) fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= POSITION_TOL)
}

/// Piecewise-constant density on `[lo, hi]` with `values.len()` equal cells.
///
/// `values[i]` is the average density over cell `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    lo: f64,
    hi: f64,
    values: Vec<f64>,
}

impl GridDensity {
    pub fn new(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(MotError::invalid(format!("grid needs lo < hi, got [{lo}, {hi}]")));
        }
        if values.is_empty() {
            return Err(MotError::invalid("grid needs at least one cell"));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(MotError::invalid(format!("invalid density value {bad}")));
        }
        let grid = Self { lo, hi, values };
        if grid.total_mass() <= 0.0 {
            return Err(MotError::invalid("grid density has zero total mass"));
        }
        Ok(grid)
    }

    /// Cell averages computed from an antiderivative `cdf` of the density.
    pub fn from_antiderivative(lo: f64, hi: f64, n: usize, cdf: impl Fn(f64) -> f64) -> Result<Self> {
        if n == 0 {
            return Err(MotError::invalid("grid needs at least one cell"));
        }
        let width = (hi - lo) / n as f64;
        let values = (0..n)
            .map(|i| {
                let (a, b) = cell_edges(lo, hi, n, i);
                (cdf(b) - cdf(a)) / width
            })
            .collect();
        Self::new(lo, hi, values)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_width(&self) -> f64 {
        (self.hi - self.lo) / self.n() as f64
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        cell_midpoint(self.lo, self.hi, self.n(), i)
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_width()
    }
}

/// Edges of cell `i`, computed from the centre outwards so that grids
/// symmetric about zero have exactly antisymmetric edges.
pub(crate) fn cell_edges(lo: f64, hi: f64, n: usize, i: usize) -> (f64, f64) {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo) / n as f64;
    let offset = |k: usize| centre + (2.0 * k as f64 - n as f64) * half;
    (offset(i), offset(i + 1))
}

pub(crate) fn cell_midpoint(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo) / n as f64;
    centre + (2.0 * i as f64 + 1.0 - n as f64) * half
}

/// One atom per cell of positive mass, placed at the cell midpoint.
pub fn quantize(g: &GridDensity, normalize: bool) -> Result<DiscreteMeasure> {
    let total = g.total_mass();
    if !(total > 0.0) {
        return Err(MotError::invalid("cannot quantize a density with zero mass"));
    }
    let width = g.cell_width();
    let scale = if normalize { 1.0 / total } else { 1.0 };
    let (points, masses) = g
        .values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(i, v)| (g.midpoint(i), v * width * scale))
        .unzip();
    DiscreteMeasure::new(1, points, masses)
}

/// Total mass and mean (first moment divided by mass; zero for the null measure).
pub fn moments(m: &DiscreteMeasure) -> (f64, Vec<f64>) {
    let mass = m.total_mass();
    let mut mean = m.first_moment();
    if mass > 0.0 {
        mean.iter_mut().for_each(|v| *v /= mass);
    }
    (mass, mean)
}

/// Outcome of [`convex_order_check`].
///
/// Gaps are taken as `nu - mu`; a negative `worst_gap` means some call
/// function of `mu` exceeds that of `nu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderReport {
    pub in_order: bool,
    pub mass_gap: f64,
    pub mean_gap: f64,
    pub worst_k: f64,
    pub worst_gap: f64,
}

impl OrderReport {
    pub fn into_error(self) -> MotError {
        MotError::NotInConvexOrder {
            mass_gap: self.mass_gap,
            mean_gap: self.mean_gap,
            worst_k: self.worst_k,
            worst_gap: self.worst_gap,
        }
    }
}

/// Call function `k -> sum_i m_i (x_i - k)_+` evaluated at sorted strikes.
fn call_values(m: &DiscreteMeasure, strikes: &[f64]) -> Vec<f64> {
    // Suffix sums over atoms strictly above the strike.
    let n = m.len();
    let mut suffix_mass = vec![0.0; n + 1];
    let mut suffix_moment = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix_mass[i] = suffix_mass[i + 1] + m.mass(i);
        suffix_moment[i] = suffix_moment[i + 1] + m.mass(i) * m.position(i);
    }
    let mut idx = 0;
    strikes
        .iter()
        .map(|&k| {
            while idx < n && m.position(idx) <= k {
                idx += 1;
            }
            (suffix_moment[idx] - k * suffix_mass[idx]).max(0.0)
        })
        .collect()
}

/// Tests `mu <=_c nu` on the line.
///
/// Masses and means must agree within `tol` and the call function of `nu`
/// must dominate that of `mu` at every atom of either measure. The gap is
/// piecewise linear in the strike with kinks only at atoms, so these strikes
/// are exhaustive. Unequal masses are reported as not in order.
pub fn convex_order_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure, tol: f64) -> Result<OrderReport> {
    if mu.dim() != 1 || nu.dim() != 1 {
        return Err(MotError::invalid("convex order is only tested in one dimension"));
    }
    let mass_gap = nu.total_mass() - mu.total_mass();
    let mean_gap = nu.first_moment()[0] - mu.first_moment()[0];

    let mut strikes: Vec<f64> = mu.points().iter().chain(nu.points()).copied().collect();
    strikes.sort_by(f64::total_cmp);
    strikes.dedup();

    let call_mu = call_values(mu, &strikes);
    let call_nu = call_values(nu, &strikes);
    let (worst_k, worst_gap) = strikes
        .iter()
        .zip(call_nu.iter().zip(&call_mu))
        .map(|(k, (cn, cm))| (*k, cn - cm))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0.0, 0.0));

    let in_order = mass_gap.abs() <= tol && mean_gap.abs() <= tol && worst_gap >= -tol;
    Ok(OrderReport {
        in_order,
        mass_gap,
        mean_gap,
        worst_k,
        worst_gap,
    })
}

/// Decomposition `mu = common + mu_bar`, `nu = common + nu_bar` with
/// `common = mu ∧ nu`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommonMassSplit {
    pub common: DiscreteMeasure,
    pub mu_bar: DiscreteMeasure,
    pub nu_bar: DiscreteMeasure,
}

/// Splits off the atomwise minimum of the two measures.
pub fn common_mass_split(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<CommonMassSplit> {
    if mu.dim() != nu.dim() {
        return Err(MotError::invalid("marginals live in different dimensions"));
    }
    let dim = mu.dim();
    let mut common: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut mu_bar: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut nu_rest: Vec<f64> = nu.masses().to_vec();

    for (p, m) in mu.atoms() {
        let matched = nu.atoms().position(|(q, _)| close(p, q));
        match matched {
            Some(j) => {
                let n = nu.mass(j);
                let shared = m.min(n);
                common.push((p.to_vec(), shared));
                let rest = m - shared;
                if rest > SPLIT_DUST * m {
                    mu_bar.push((p.to_vec(), rest));
                }
                let rest_nu = n - shared;
                nu_rest[j] = if rest_nu > SPLIT_DUST * n { rest_nu } else { 0.0 };
            }
            None => mu_bar.push((p.to_vec(), m)),
        }
    }
    let nu_bar: Vec<(Vec<f64>, f64)> = nu
        .atoms()
        .zip(nu_rest)
        .filter(|(_, r)| *r > 0.0)
        .map(|((q, _), r)| (q.to_vec(), r))
        .collect();

    Ok(CommonMassSplit {
        common: DiscreteMeasure::from_points(dim, &common)?,
        mu_bar: DiscreteMeasure::from_points(dim, &mu_bar)?,
        nu_bar: DiscreteMeasure::from_points(dim, &nu_bar)?,
    })
}
