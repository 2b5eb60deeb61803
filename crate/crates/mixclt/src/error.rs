//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Potential failed a structural invariant (empty, all-zero, non-finite).
    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    /// Operation requires a zero-mass potential (sum of V over the lattice = 0).
    #[error("potential has nonzero total mass {0}; operation requires sum V = 0")]
    NonzeroMass(f64),

    /// Simulation or estimator parameter out of range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Sampling step does not align with the path grid.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Monte Carlo configuration cannot produce a meaningful report.
    #[error("infeasible configuration: {0}")]
    InfeasibleConfig(String),

    /// Statistic requested on an empty sample.
    #[error("empty sample")]
    EmptySample,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
