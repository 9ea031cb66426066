//! The `mot` command line.
//!
//! Exit codes: 0 success, 1 mathematical negative (not in convex order,
//! infeasible, verification failed), 2 input error, 3 numerical failure.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coupling::Coupling;
use crate::error::{MotError, Result};
use crate::io::{self, CouplingFile, LiftedFile};
use crate::lp::{solve_lp, LpStatus, Sense};
use crate::measures::{common_mass_split, convex_order_check, DiscreteMeasure};
use crate::mot1d::{detect_separation, solve_sweep, CostSpec, SeparationInterval, TransportMaps, DEFAULT_TOL};
use crate::radial::{monte_carlo_check, solve_radial};
use crate::verify::{
    check_decreasing, deformation_curve, detect_forbidden, max_forward_difference, validate_coupling,
    DeformationInstance, VerificationReport, FORBIDDEN_TOL,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mot", version, about = "Optimal martingale transport for the cost |x - y|^p, 0 < p <= 1")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Auto,
    Sweep,
    Lp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SenseArg {
    Min,
    Max,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check whether mu precedes nu in convex order.
    CheckOrder {
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Solve the transport problem between two 1-D marginals.
    Solve {
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Coupling JSON; maps go next to it as `<stem>.maps.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the LP directly, without preprocessing.
    Oracle {
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        #[arg(long, value_enum, default_value_t = SenseArg::Min)]
        sense: SenseArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve between radially symmetric marginals.
    SolveRadial {
        input: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
        /// Cells of the induced 1-D grid.
        #[arg(long, default_value_t = 400)]
        n: usize,
        /// Lifted samples for the Monte Carlo summary.
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check marginals, barycenters, forbidden configurations and maps.
    Verify {
        coupling: PathBuf,
        #[arg(long)]
        marginals: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the deformation curve on random or given geometries.
    DeformCheck {
        /// Exponent `q` of the profile `h(s) = s^q`.
        #[arg(long, alias = "q", default_value_t = 1.0)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, requires_all = ["z", "b"])]
        r: Option<f64>,
        #[arg(long, requires_all = ["r", "b"], allow_hyphen_values = true)]
        z: Option<f64>,
        #[arg(long, requires_all = ["r", "z"], allow_hyphen_values = true)]
        b: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn exit_code(err: &MotError) -> i32 {
    match err {
        MotError::NotInConvexOrder { .. } | MotError::Infeasible => EXIT_NEGATIVE,
        MotError::SolverFailure { .. } => EXIT_NUMERICAL,
        MotError::InvalidInput(_)
        | MotError::SeparationViolated(_)
        | MotError::Io(_)
        | MotError::Json(_)
        | MotError::Csv(_) => EXIT_INPUT,
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if matches!(cli.command, Command::SolveRadial { .. }) && matches!(e, MotError::NotInConvexOrder { .. }) {
                let _ = writeln!(err, "hint: the quantized marginals may be out of order; retry with a larger --n");
            }
            exit_code(&e)
        }
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn execute(command: &Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::CheckOrder { input, tol } => {
            let (mu, nu) = io::read_marginals(input)?;
            let report = convex_order_check(&mu, &nu, *tol)?;
            print_json(out, &report)?;
            Ok(if report.in_order { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::Solve { input, p, method, tol, out: path } => {
            let (mu, nu) = io::read_marginals(input)?;
            let outcome = solve(&mu, &nu, *p, *method, *tol)?;
            let file = CouplingFile::new(&outcome.coupling, Some(*p), Some(outcome.method_name()), outcome.maps.as_ref());
            match path {
                Some(path) => {
                    io::write_json(path, &file)?;
                    if let Some(maps) = &outcome.maps {
                        io::write_maps_csv(BufWriter::new(File::create(sidecar(path, "maps.csv"))?), maps)?;
                    }
                    print_json(out, &outcome.summary(*p))?;
                }
                None => print_json(out, &file)?,
            }
            Ok(EXIT_OK)
        }
        Command::Oracle { input, p, sense, out: path } => {
            let (mu, nu) = io::read_marginals(input)?;
            CostSpec::new(*p)?;
            let sense = match sense {
                SenseArg::Min => Sense::Min,
                SenseArg::Max => Sense::Max,
            };
            let solution = solve_lp(&mu, &nu, *p, sense)?;
            match solution.status {
                LpStatus::Infeasible => return Err(MotError::Infeasible),
                LpStatus::NumericalFailure => return Err(MotError::solver("LP did not converge", solution.residual)),
                LpStatus::Optimal => {}
            }
            let file = CouplingFile::new(&solution.coupling, Some(*p), Some("lp"), None);
            match path {
                Some(path) => {
                    io::write_json(path, &file)?;
                    print_json(
                        out,
                        &serde_json::json!({ "objective": solution.objective, "iterations": solution.iterations }),
                    )?;
                }
                None => print_json(out, &file)?,
            }
            Ok(EXIT_OK)
        }
        Command::SolveRadial { input, p, n, samples, seed, out: path } => {
            let (mu, nu) = io::read_radial(input)?;
            let solution = solve_radial(&mu, &nu, *p, *n)?;
            let monte_carlo = if *samples > 0 {
                let bins = 10;
                let radius = mu.max_radius();
                let edges: Vec<f64> = (0..=bins).map(|i| radius * i as f64 / bins as f64).collect();
                let mut edges = edges;
                edges[bins] = f64::INFINITY;
                let expected: Vec<f64> = edges.windows(2).map(|w| mu.annulus_mass(w[0], w[1])).collect();
                Some(monte_carlo_check(&solution.lifted, &edges, &expected, *samples, *seed)?)
            } else {
                None
            };
            let file = LiftedFile {
                dim: solution.lifted.dim(),
                p: *p,
                path: solution.path,
                cost_1d: solution.cost_1d,
                cost_nd: solution.cost_nd,
                base: CouplingFile::new(solution.lifted.base(), Some(*p), None, solution.maps.as_ref()),
                monte_carlo,
            };
            match path {
                Some(path) => {
                    io::write_json(path, &file)?;
                    io::write_induced_csv(
                        BufWriter::new(File::create(sidecar(path, "induced.csv"))?),
                        &solution.mu_induced,
                        &solution.nu_induced,
                    )?;
                    print_json(
                        out,
                        &serde_json::json!({
                            "path": file.path,
                            "cost_1d": file.cost_1d,
                            "cost_nd": file.cost_nd,
                            "monte_carlo": file.monte_carlo,
                        }),
                    )?;
                }
                None => print_json(out, &file)?,
            }
            Ok(EXIT_OK)
        }
        Command::Verify {
            coupling,
            marginals,
            tol,
            out: path,
        } => {
            let file = io::read_coupling(coupling)?;
            let pi = file.coupling()?;
            let (mu, nu) = match marginals {
                Some(m) => io::read_marginals(m)?,
                None if pi.is_empty() => return Err(MotError::invalid("empty coupling and no marginals given")),
                None => (pi.source_marginal(), pi.target_marginal()),
            };
            let residuals = validate_coupling(&pi, &mu, &nu, *tol)?;
            let forbidden = if pi.dim() == 1 { detect_forbidden(&pi, FORBIDDEN_TOL)? } else { Vec::new() };
            let decreasing = file.transport_maps().map(|m| check_decreasing(&m));
            let report = VerificationReport {
                forbidden,
                residuals: Some(residuals),
                decreasing,
                deformation: Vec::new(),
            };
            if let Some(path) = path {
                io::write_json(path, &report)?;
            }
            print_json(out, &report)?;
            let clean = report.forbidden.is_empty() && residuals.is_clean() && decreasing != Some(false);
            Ok(if clean { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::DeformCheck {
            p: q,
            seed,
            instances,
            grid,
            r,
            z,
            b,
            out: path,
        } => {
            let geometries = match (r, z, b) {
                (Some(r), Some(z), Some(b)) => vec![DeformationInstance::new(*b, *r, *z, *q)?],
                _ => random_geometries(*q, *instances, *seed)?,
            };
            let curves = geometries
                .iter()
                .map(|g| deformation_curve(g, *grid))
                .collect::<Result<Vec<_>>>()?;
            let verdicts: Vec<bool> = curves.iter().map(|c| curve_passes(c, *q)).collect();
            if let Some(path) = path {
                io::write_curve_csv(BufWriter::new(File::create(path)?), &curves)?;
            }
            let passed = verdicts.iter().filter(|v| **v).count();
            let worst = curves.iter().map(|c| max_forward_difference(c)).fold(f64::NEG_INFINITY, f64::max);
            print_json(
                out,
                &serde_json::json!({
                    "q": q,
                    "instances": curves.len(),
                    "passed": passed,
                    "max_forward_difference": worst,
                }),
            )?;
            Ok(if passed == curves.len() { EXIT_OK } else { EXIT_NEGATIVE })
        }
    }
}

/// `h(s) = s^2` must give a constant curve; any other exponent must give a
/// strictly decreasing one.
pub fn curve_passes(curve: &[(f64, f64)], q: f64) -> bool {
    let first = curve[0].1;
    let last = curve[curve.len() - 1].1;
    if q == 2.0 {
        curve.iter().all(|(_, c)| (c - first).abs() <= 1e-12 * first.abs().max(1.0))
    } else {
        max_forward_difference(curve) < 0.0 && first > last
    }
}

/// Geometries with `r` in `[0.5, 2]`, `z = r u` for `u` in `(-0.9, 0.9)`
/// and `|b|` in `[0.2, 2]` with a random sign.
pub fn random_geometries(q: f64, count: usize, seed: u64) -> Result<Vec<DeformationInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = rng.random_range(0.5..=2.0);
            let z = r * rng.random_range(-0.9..0.9);
            let b = rng.random_range(0.2..=2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            DeformationInstance::new(b, r, z, q)
        })
        .collect()
}

/// `<dir>/<stem>.<suffix>` next to `path`.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

/// Result of [`solve`].
#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub coupling: Coupling,
    pub maps: Option<TransportMaps>,
    pub method: Method,
    pub interval: Option<SeparationInterval>,
    pub diagonal_mass: f64,
}

impl SolveOutcome {
    fn method_name(&self) -> &'static str {
        match self.method {
            Method::Sweep => "sweep",
            Method::Lp => "lp",
            Method::Auto => "auto",
        }
    }

    fn summary(&self, p: f64) -> serde_json::Value {
        serde_json::json!({
            "method": self.method,
            "cost": self.coupling.cost(p),
            "entries": self.coupling.len(),
            "diagonal_mass": self.diagonal_mass,
            "interval": self.interval.map(|i| [i.a, i.b]),
        })
    }
}

/// Splits off the common mass, which stays put, and transports the rest
/// with the sweep when an interval separates it, otherwise with the LP.
pub fn solve(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64, method: Method, tol: f64) -> Result<SolveOutcome> {
    let p = CostSpec::new(p)?.p();
    if mu.dim() != 1 || nu.dim() != 1 {
        return Err(MotError::invalid("solve works on the real line; use solve-radial or oracle in higher dimensions"));
    }
    let report = convex_order_check(mu, nu, tol)?;
    if !report.in_order {
        return Err(report.into_error());
    }
    let split = common_mass_split(mu, nu)?;
    let mut coupling = Coupling::diagonal(&split.common);
    let diagonal_mass = split.common.total_mass();
    if split.mu_bar.is_empty() {
        let method = if method == Method::Lp { Method::Lp } else { Method::Sweep };
        return Ok(SolveOutcome {
            coupling,
            maps: None,
            method,
            interval: None,
            diagonal_mass,
        });
    }

    let interval = detect_separation(&split.mu_bar, &split.nu_bar);
    let use_sweep = match (method, interval) {
        (Method::Lp, _) => false,
        (_, Some(_)) => true,
        (Method::Sweep, None) => {
            return Err(MotError::invalid("no interval separates mu from nu; the sweep does not apply"))
        }
        (Method::Auto, None) => false,
    };

    if use_sweep {
        let interval = interval.expect("checked above");
        let solution = solve_sweep(&split.mu_bar, &split.nu_bar, interval, tol)?;
        coupling.extend(&solution.coupling)?;
        Ok(SolveOutcome {
            coupling,
            maps: Some(solution.maps),
            method: Method::Sweep,
            interval: Some(interval),
            diagonal_mass,
        })
    } else {
        let solution = solve_lp(&split.mu_bar, &split.nu_bar, p, Sense::Min)?;
        match solution.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(MotError::Infeasible),
            LpStatus::NumericalFailure => return Err(MotError::solver("LP did not converge", solution.residual)),
        }
        coupling.extend(&solution.coupling)?;
        Ok(SolveOutcome {
            coupling,
            maps: None,
            method: Method::Lp,
            interval,
            diagonal_mass,
        })
    }
}
