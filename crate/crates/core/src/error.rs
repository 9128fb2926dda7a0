use thiserror::Error;

/// Errors raised by the reconciliation library.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("matrix has GF(2) rank {rank} but {rows} rows")]
    RankDeficient { rank: usize, rows: usize },

    #[error("infeasible degree specification: {0}")]
    InfeasibleSpec(String),

    #[error("construction failed: {0}")]
    ConstructionFailed(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("inconsistent matrix description: {0}")]
    Consistency(String),

    #[error("syndrome sets belong to different families or have different sizes")]
    FamilyMismatch,

    #[error("empty sample")]
    EmptySample,

    #[error("error rate {0} outside the open interval (0, 0.5)")]
    InvalidErrorRate(f64),

    #[error("binary entropy is zero; efficiency undefined")]
    ZeroEntropy,

    #[error("sampling estimator selected but no disclosed sample supplied")]
    MissingSample,

    #[error("I/O failure: {0}")]
    Io(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension { expected, actual })
    }
}
