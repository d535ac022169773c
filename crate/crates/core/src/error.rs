use alloc::string::String;

use thiserror::Error;

/// Errors raised by graph construction, problem assembly and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("random topology stayed disconnected after {attempts} draws")]
    DisconnectedTopology { attempts: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid convex set: {0}")]
    InvalidSet(String),

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("matrix is rank deficient (column {column})")]
    RankDeficient { column: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("starting point is infeasible for agent {agent}")]
    InfeasibleStart { agent: usize },

    #[error("scaling parameter of agent {agent} overflowed ({r:e})")]
    ScalingOverflow { agent: usize, r: f64 },

    #[error("criterion still violated for agent {agent} after {retries} retries")]
    InnerLoopStall { agent: usize, retries: usize },

    #[error("direction vanished while the predictor differs from the iterate")]
    DegeneratePrediction,

    #[error("no convergence within {iterations} iterations")]
    MaxItersExceeded { iterations: usize },

    #[error("unsupported topology: {0}")]
    TopologyUnsupported(String),

    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::ShapeMismatch { expected, found })
    }
}
