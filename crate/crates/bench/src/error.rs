use thiserror::Error;

/// Failures of the experiment harness, each mapped to a process exit code.
#[derive(Error, Debug)]
pub enum BenchError {
    #[error("invalid arguments: {0}")]
    Args(String),

    #[error("code construction failed: {0}")]
    Construction(mmrecon::Error),

    #[error("I/O failure: {0}")]
    Io(String),

    #[error(transparent)]
    Library(mmrecon::Error),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Args(_) | BenchError::Library(_) => 2,
            BenchError::Construction(_) => 3,
            BenchError::Io(_) => 4,
        }
    }
}

impl From<mmrecon::Error> for BenchError {
    fn from(e: mmrecon::Error) -> Self {
        match e {
            mmrecon::Error::InfeasibleSpec(_)
            | mmrecon::Error::ConstructionFailed(_)
            | mmrecon::Error::RankDeficient { .. } => BenchError::Construction(e),
            mmrecon::Error::Io(msg) => BenchError::Io(msg),
            mmrecon::Error::Parse { .. } | mmrecon::Error::Consistency(_) => {
                BenchError::Io(e.to_string())
            }
            other => BenchError::Library(other),
        }
    }
}

impl From<std::io::Error> for BenchError {
    fn from(e: std::io::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}

impl From<csv::Error> for BenchError {
    fn from(e: csv::Error) -> Self {
        BenchError::Io(e.to_string())
    }
}
