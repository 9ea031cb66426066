use thiserror::Error;

/// Errors produced by the martingale transport routines.
#[derive(Debug, Error)]
pub enum MotError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("marginals are not in convex order (mass gap {mass_gap:e}, mean gap {mean_gap:e}, worst call gap {worst_gap:e} at k = {worst_k})")]
    NotInConvexOrder {
        mass_gap: f64,
        mean_gap: f64,
        worst_k: f64,
        worst_gap: f64,
    },

    #[error("separation assumption violated: {0}")]
    SeparationViolated(String),

    #[error("no martingale coupling exists between the marginals")]
    Infeasible,

    #[error("solver failure: {reason} (residual {residual:e})")]
    SolverFailure { reason: String, residual: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),
}

impl MotError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        MotError::InvalidInput(msg.into())
    }

    pub(crate) fn solver(reason: impl Into<String>, residual: f64) -> Self {
        MotError::SolverFailure {
            reason: reason.into(),
            residual,
        }
    }
}

pub type Result<T, E = MotError> = std::result::Result<T, E>;
