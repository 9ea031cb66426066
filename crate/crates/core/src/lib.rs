//! Optimal martingale transport between probability measures on the line and
//! between radially symmetric measures on `R^d`, for the cost `|x - y|^p`
//! with `0 < p <= 1`.
//!
//! The crate is organised around a handful of modules:
//!
//! - [`measures`]: atomic marginals, grid densities and their quantization,
//!   the call-function convex-order test and the common-mass split.
//! - [`coupling`]: atomic transport plans and their cost.
//! - [`mot1d`]: the frontier sweep that constructs the unique optimal
//!   martingale coupling when an open interval separates the two marginals.
//! - [`lp`]: a dense two-phase simplex and the exact LP formulation of the
//!   discretized problem, used as a brute-force oracle.
//! - [`radial`]: reduction of radially symmetric marginals in `R^d` to
//!   symmetric marginals on the line, lifting, sampling and the rotation /
//!   reflection symmetrizations.
//! - [`verify`]: forbidden-configuration search, three-point swap gains,
//!   decreasing-property checks and the sphere deformation curve.
//! - [`io`] and [`cli`]: file formats and the `mot` command line.
//!
//! ```
//! use mot_core::measures::DiscreteMeasure;
//! use mot_core::mot1d::{solve_sweep, SeparationInterval};
//!
//! let mu = DiscreteMeasure::from_1d(&[(-0.5, 0.5), (0.5, 0.5)]).unwrap();
//! let nu = DiscreteMeasure::from_1d(&[(-2.0, 0.5), (2.0, 0.5)]).unwrap();
//! let interval = SeparationInterval::new(-1.0, 1.0).unwrap();
//! let solution = solve_sweep(&mu, &nu, interval, 1e-9).unwrap();
//! assert!((solution.coupling.cost(1.0) - 1.875).abs() < 1e-12);
//! ```

pub mod cli;
pub mod coupling;
mod error;
pub mod generate;
pub mod io;
pub mod lp;
pub mod measures;
pub mod mot1d;
pub mod radial;
pub mod verify;

pub use coupling::{Coupling, CouplingEntry};
pub use error::{MotError, Result};
pub use measures::{DiscreteMeasure, GridDensity, OrderReport};
pub use mot1d::{SeparationInterval, TransportMaps};
