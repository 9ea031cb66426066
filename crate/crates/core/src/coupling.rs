//! Atomic transport plans.

use std::cmp::Ordering;

use crate::error::{MotError, Result};
use crate::measures::{close, DiscreteMeasure, POSITION_TOL};

/// One atom `(x, y, mass)` of a coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingEntry {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub mass: f64,
}

impl CouplingEntry {
    pub fn distance(&self) -> f64 {
        euclidean(&self.x, &self.y)
    }
}

/// A finite atomic measure on pairs `(x, y)` in `R^dim x R^dim`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Coupling {
    dim: usize,
    entries: Vec<CouplingEntry>,
}

/// The disintegration of a coupling at one source atom.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub x: Vec<f64>,
    /// `(target, mass)` pairs, sorted lexicographically by target.
    pub targets: Vec<(Vec<f64>, f64)>,
}

impl Row {
    pub fn mass(&self) -> f64 {
        self.targets.iter().map(|(_, m)| m).sum()
    }

    /// Unnormalized barycenter `sum_y y * mass(x, y)`.
    pub fn first_moment(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.x.len()];
        for (y, m) in &self.targets {
            for (o, v) in out.iter_mut().zip(y) {
                *o += m * v;
            }
        }
        out
    }
}

impl Coupling {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    /// One-dimensional coupling from `(x, y, mass)` triples.
    pub fn from_1d(entries: &[(f64, f64, f64)]) -> Result<Self> {
        let mut c = Self::new(1);
        for &(x, y, m) in entries {
            c.push(vec![x], vec![y], m)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, x: Vec<f64>, y: Vec<f64>, mass: f64) -> Result<()> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(MotError::invalid(format!(
                "coupling entry does not have dimension {}",
                self.dim
            )));
        }
        if !mass.is_finite() || mass < 0.0 || x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(MotError::invalid(format!("invalid coupling entry mass {mass}")));
        }
        if mass > 0.0 {
            self.entries.push(CouplingEntry { x, y, mass });
        }
        Ok(())
    }

    pub(crate) fn push_1d(&mut self, x: f64, y: f64, mass: f64) {
        debug_assert_eq!(self.dim, 1);
        if mass > 0.0 {
            self.entries.push(CouplingEntry {
                x: vec![x],
                y: vec![y],
                mass,
            });
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[CouplingEntry] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [CouplingEntry] {
        &mut self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, e| a + e.mass)
    }

    /// `sum mass * |x - y|^p` with the Euclidean norm.
    pub fn cost(&self, p: f64) -> f64 {
        self.entries.iter().map(|e| e.mass * e.distance().powf(p)).sum()
    }

    pub fn source_marginal(&self) -> DiscreteMeasure {
        self.marginal(|e| &e.x)
    }

    pub fn target_marginal(&self) -> DiscreteMeasure {
        self.marginal(|e| &e.y)
    }

    fn marginal(&self, pick: impl Fn(&CouplingEntry) -> &Vec<f64>) -> DiscreteMeasure {
        let points = self.entries.iter().flat_map(|e| pick(e).iter().copied()).collect();
        let masses = self.entries.iter().map(|e| e.mass).collect();
        DiscreteMeasure::new(self.dim.max(1), points, masses).expect("coupling entries are valid")
    }

    /// Entries merged by `(x, y)` and grouped into rows sorted by source.
    pub fn rows(&self) -> Vec<Row> {
        let merged = self.canonical();
        let mut rows: Vec<Row> = Vec::new();
        for e in merged.entries {
            let found = (0..rows.len())
                .rev()
                .take_while(|&j| e.x[0] - rows[j].x[0] <= POSITION_TOL)
                .find(|&j| close(&rows[j].x, &e.x));
            match found {
                Some(j) => rows[j].targets.push((e.y, e.mass)),
                None => rows.push(Row {
                    x: e.x,
                    targets: vec![(e.y, e.mass)],
                }),
            }
        }
        rows
    }

    /// Same plan with entries sorted by `(x, y)` and duplicates merged.
    pub fn canonical(&self) -> Coupling {
        let mut sorted = self.entries.clone();
        sorted.sort_by(pair_cmp);
        let mut out: Vec<CouplingEntry> = Vec::with_capacity(sorted.len());
        for e in sorted {
            match find_close(&out, &e.x, &e.y) {
                Some(j) => out[j].mass += e.mass,
                None => out.push(e),
            }
        }
        Coupling {
            dim: self.dim,
            entries: out,
        }
    }

    /// Image under `(x, y) -> (-x, -y)`.
    pub fn reflected(&self) -> Coupling {
        Coupling {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|e| CouplingEntry {
                    x: e.x.iter().map(|v| -v).collect(),
                    y: e.y.iter().map(|v| -v).collect(),
                    mass: e.mass,
                })
                .collect(),
        }
    }

    /// Appends every entry of `other`.
    pub fn extend(&mut self, other: &Coupling) -> Result<()> {
        if other.dim != self.dim && !other.is_empty() {
            return Err(MotError::invalid("cannot merge couplings of different dimension"));
        }
        self.entries.extend(other.entries.iter().cloned());
        Ok(())
    }

    /// Diagonal plan `x -> x` for every atom of `m`.
    pub fn diagonal(m: &DiscreteMeasure) -> Coupling {
        Coupling {
            dim: m.dim(),
            entries: m
                .atoms()
                .map(|(p, mass)| CouplingEntry {
                    x: p.to_vec(),
                    y: p.to_vec(),
                    mass,
                })
                .collect(),
        }
    }

    /// Largest difference in mass over all `(x, y)` pairs of either plan.
    pub fn entrywise_distance(&self, other: &Coupling) -> f64 {
        let a = self.canonical().entries;
        let b = other.canonical().entries;
        let mut worst: f64 = 0.0;
        for e in &a {
            let matched = find_close(&b, &e.x, &e.y).map_or(0.0, |j| b[j].mass);
            worst = worst.max((e.mass - matched).abs());
        }
        for e in &b {
            if find_close(&a, &e.x, &e.y).is_none() {
                worst = worst.max(e.mass);
            }
        }
        worst
    }
}

/// Index of an entry at `(x, y)` in a list sorted by [`pair_cmp`].
fn find_close(sorted: &[CouplingEntry], x: &[f64], y: &[f64]) -> Option<usize> {
    let start = sorted.partition_point(|e| e.x[0] < x[0] - POSITION_TOL);
    sorted[start..]
        .iter()
        .take_while(|e| e.x[0] <= x[0] + POSITION_TOL)
        .position(|e| close(&e.x, x) && close(&e.y, y))
        .map(|k| start + k)
}

fn pair_cmp(a: &CouplingEntry, b: &CouplingEntry) -> Ordering {
    let cmp = |u: &[f64], v: &[f64]| {
        u.iter()
            .zip(v)
            .map(|(s, t)| s.total_cmp(t))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    };
    cmp(&a.x, &b.x).then_with(|| cmp(&a.y, &b.y))
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    if a.len() == 1 {
        return (a[0] - b[0]).abs();
    }
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cost_of_symmetric_split() {
        let c = Coupling::from_1d(&[(0.0, -2.0, 0.5), (0.0, 2.0, 0.5)]).unwrap();
        assert_abs_diff_eq!(c.cost(1.0), 2.0);
        assert_abs_diff_eq!(c.cost(0.5), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn rows_merge_duplicate_entries() {
        let c = Coupling::from_1d(&[(1.0, 3.0, 0.1), (0.0, 2.0, 0.2), (1.0, 3.0, 0.1), (1.0, -1.0, 0.3)]).unwrap();
        let rows = c.rows();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].x, vec![0.0]);
        assert_eq!(rows[1].targets.len(), 2);
        assert_abs_diff_eq!(rows[1].targets[1].1, 0.2);
        assert_abs_diff_eq!(rows[1].mass(), 0.5);
    }

    #[test]
    fn entrywise_distance_counts_missing_entries() {
        let a = Coupling::from_1d(&[(0.0, 1.0, 0.5), (0.0, -1.0, 0.5)]).unwrap();
        let b = Coupling::from_1d(&[(0.0, 1.0, 0.4), (0.0, -1.0, 0.5), (0.0, 3.0, 0.1)]).unwrap();
        assert_abs_diff_eq!(a.entrywise_distance(&b), 0.1, epsilon = 1e-15);
        assert_eq!(a.entrywise_distance(&a.reflected().reflected()), 0.0);
    }

    #[test]
    fn marginals_and_dimension_checks() {
        let mut c = Coupling::new(2);
        assert!(c.push(vec![0.0], vec![1.0, 1.0], 1.0).is_err());
        c.push(vec![0.0, 0.0], vec![3.0, 4.0], 1.0).unwrap();
        assert_abs_diff_eq!(c.cost(1.0), 5.0);
        assert_eq!(c.target_marginal().point(0), &[3.0, 4.0]);
    }
}
