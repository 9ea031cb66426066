//! File formats: marginal and radial specs, coupling JSON, CSV tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coupling::Coupling;
use crate::error::{MotError, Result};
use crate::measures::{quantize, DiscreteMeasure, GridDensity};
use crate::mot1d::{MapRow, TransportMaps};
use crate::radial::{MonteCarloSummary, RadialProfile, SolvePath};

/// A position written either as a number (1-D) or as an array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Position {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Position {
    fn from_slice(p: &[f64]) -> Self {
        match p {
            [x] => Position::Scalar(*x),
            _ => Position::Vector(p.to_vec()),
        }
    }

    fn into_vec(self) -> Vec<f64> {
        match self {
            Position::Scalar(x) => vec![x],
            Position::Vector(v) => v,
        }
    }
}

/// `{"type": "discrete", "atoms": [[pos, mass], ...]}` or
/// `{"type": "grid", "lo": .., "hi": .., "values": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum MeasureSpec {
    Discrete { atoms: Vec<(Position, f64)> },
    Grid {
        lo: f64,
        hi: f64,
        #[serde(default)]
        n: Option<usize>,
        values: Vec<f64>,
    },
}

impl MeasureSpec {
    pub fn to_measure(&self) -> Result<DiscreteMeasure> {
        match self {
            MeasureSpec::Discrete { atoms } => {
                let dim = match atoms.first() {
                    Some((Position::Vector(v), _)) => v.len(),
                    _ => 1,
                };
                let atoms: Vec<(Vec<f64>, f64)> = atoms.iter().map(|(p, m)| (p.clone().into_vec(), *m)).collect();
                DiscreteMeasure::from_points(dim, &atoms)
            }
            MeasureSpec::Grid { lo, hi, n, values } => {
                if let Some(n) = n {
                    if *n != values.len() {
                        return Err(MotError::invalid(format!("grid declares n = {n} but has {} values", values.len())));
                    }
                }
                quantize(&GridDensity::new(*lo, *hi, values.clone())?, false)
            }
        }
    }

    pub fn from_measure(m: &DiscreteMeasure) -> Self {
        MeasureSpec::Discrete {
            atoms: m.atoms().map(|(p, mass)| (Position::from_slice(p), mass)).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarginalSpec {
    pub mu: MeasureSpec,
    pub nu: MeasureSpec,
}

impl MarginalSpec {
    pub fn new(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Self {
        Self {
            mu: MeasureSpec::from_measure(mu),
            nu: MeasureSpec::from_measure(nu),
        }
    }

    pub fn measures(&self) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
        let mu = self.mu.to_measure()?;
        let nu = self.nu.to_measure()?;
        if mu.dim() != nu.dim() {
            return Err(MotError::invalid("mu and nu have different dimensions"));
        }
        Ok((mu, nu))
    }
}

pub fn read_marginals(path: &Path) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    parse_marginals(&fs::read_to_string(path)?)
}

pub fn parse_marginals(text: &str) -> Result<(DiscreteMeasure, DiscreteMeasure)> {
    serde_json::from_str::<MarginalSpec>(text)?.measures()
}

/// `{"type": "radial-grid", "r": [edges], "f": [values]}` or
/// `{"type": "radial-shells", "atoms": [[r, mass], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum RadialMeasureSpec {
    RadialGrid { r: Vec<f64>, f: Vec<f64> },
    RadialShells { atoms: Vec<(f64, f64)> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RadialSpec {
    pub dim: usize,
    pub mu: RadialMeasureSpec,
    pub nu: RadialMeasureSpec,
}

impl RadialSpec {
    pub fn profiles(&self) -> Result<(RadialProfile, RadialProfile)> {
        let build = |spec: &RadialMeasureSpec| match spec {
            RadialMeasureSpec::RadialGrid { r, f } => RadialProfile::density(self.dim, r.clone(), f.clone()),
            RadialMeasureSpec::RadialShells { atoms } => RadialProfile::shells(self.dim, atoms.clone()),
        };
        Ok((build(&self.mu)?, build(&self.nu)?))
    }
}

pub fn read_radial(path: &Path) -> Result<(RadialProfile, RadialProfile)> {
    serde_json::from_str::<RadialSpec>(&fs::read_to_string(path)?)?.profiles()
}

/// Coupling JSON: `entries` as `[x, y, mass]`, optional cost and maps
/// (`[x, S, T, lambda-, lambda+]` rows).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CouplingFile {
    #[serde(default = "one")]
    pub dim: usize,
    pub entries: Vec<(Position, Position, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maps: Option<Vec<[f64; 5]>>,
}

fn one() -> usize {
    1
}

impl CouplingFile {
    pub fn new(pi: &Coupling, p: Option<f64>, method: Option<&str>, maps: Option<&TransportMaps>) -> Self {
        Self {
            dim: pi.dim(),
            entries: pi
                .entries()
                .iter()
                .map(|e| (Position::from_slice(&e.x), Position::from_slice(&e.y), e.mass))
                .collect(),
            p,
            cost: p.map(|p| pi.cost(p)),
            method: method.map(str::to_string),
            maps: maps.map(|m| {
                m.rows
                    .iter()
                    .map(|r| [r.x, r.s, r.t, r.lambda_minus, r.lambda_plus])
                    .collect()
            }),
        }
    }

    pub fn coupling(&self) -> Result<Coupling> {
        let mut pi = Coupling::new(self.dim);
        for (x, y, m) in &self.entries {
            pi.push(x.clone().into_vec(), y.clone().into_vec(), *m)?;
        }
        Ok(pi)
    }

    pub fn transport_maps(&self) -> Option<TransportMaps> {
        self.maps.as_ref().map(|rows| TransportMaps {
            rows: rows
                .iter()
                .map(|r| MapRow {
                    x: r[0],
                    s: r[1],
                    t: r[2],
                    lambda_minus: r[3],
                    lambda_plus: r[4],
                })
                .collect(),
        })
    }
}

pub fn read_coupling(path: &Path) -> Result<CouplingFile> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Output of the radial solver: the signed-radius coupling and both costs.
#[derive(Clone, Debug, Serialize)]
pub struct LiftedFile {
    pub dim: usize,
    pub p: f64,
    pub path: SolvePath,
    pub cost_1d: f64,
    pub cost_nd: f64,
    pub base: CouplingFile,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloSummary>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_maps_csv<W: Write>(out: W, maps: &TransportMaps) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "S", "T", "lambda_minus", "lambda_plus"])?;
    for r in &maps.rows {
        w.serialize((r.x, r.s, r.t, r.lambda_minus, r.lambda_plus))?;
    }
    w.flush()?;
    Ok(())
}

/// `t` followed by one `C` column per curve; all curves share the grid.
pub fn write_curve_csv<W: Write>(out: W, curves: &[Vec<(f64, f64)>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((0..curves.len()).map(|i| format!("c{i}")));
    w.write_record(&header)?;
    let rows = curves.first().map_or(0, Vec::len);
    for i in 0..rows {
        let mut record = vec![curves[0][i].0.to_string()];
        record.extend(curves.iter().map(|c| c[i].1.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Atoms of the induced marginals, one `measure,x,mass` row each.
pub fn write_induced_csv<W: Write>(out: W, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["measure", "x", "mass"])?;
    for (name, m) in [("mu", mu), ("nu", nu)] {
        for (x, mass) in m.atoms_1d() {
            w.serialize((name, x, mass))?;
        }
    }
    w.flush()?;
    Ok(())
}
