//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric not positive definite at node {node} (min eigenvalue {min_eig:.3e})")]
    SingularMetric { node: usize, min_eig: f64 },

    #[error("unsupported rank for this operation: {0}")]
    UnsupportedRank(String),

    #[error("endomorphism not diagonalizable: symmetrization residual {0:.3e}")]
    NonDiagonalizable(f64),

    #[error("volume density degenerates near t = {t_bad:.6e}")]
    DegenerateVolume { t_bad: f64 },

    #[error("canonical frame degenerate (min frame density {min_h:.3e})")]
    DegenerateFrame { min_h: f64 },

    #[error("2-form / metric pair incompatible even after polar retraction")]
    IncompatiblePair,

    #[error("projection solver stalled after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("variation step too large: {0}")]
    StepTooLarge(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown identity: {0}")]
    UnknownIdentity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
