//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("eigensolver failed to converge (dim {dim}, lambda {lambda})")]
    Convergence { dim: usize, lambda: f64 },

    #[error("input is not unitary: defect {defect:e} exceeds {limit:e}")]
    NonUnitary { defect: f64, limit: f64 },

    #[error("degenerate gap {gap:e} at level {level}")]
    DegenerateGap { level: usize, gap: f64 },

    #[error("level {0} has no neighbour")]
    NoNeighbor(usize),

    #[error("grid index {index} outside the stencil range 1..={max}")]
    OutOfStencil { index: usize, max: usize },

    #[error("peak refinement for level {level} escaped its bracket [{lo}, {hi}]")]
    RefinementDiverged { level: usize, lo: f64, hi: f64 },

    #[error("Floquet integration did not converge: residual {residual:e} at {steps} steps")]
    IntegrationFailure { residual: f64, steps: usize },

    #[error("resource cap exceeded: {what} = {size} (cap {cap})")]
    ResourceCap { what: String, size: usize, cap: usize },

    #[error("fit failed: {0}")]
    FitFailure(String),

    #[error("statistics input: {0}")]
    Statistics(String),

    #[error("mixture density has an atom at c = 0; use the CDF")]
    AtomAtZero,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors that originate in the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Convergence { .. }
                | Error::NonUnitary { .. }
                | Error::DegenerateGap { .. }
                | Error::RefinementDiverged { .. }
                | Error::IntegrationFailure { .. }
                | Error::FitFailure(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
