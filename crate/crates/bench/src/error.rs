use std::path::PathBuf;

use pnp_core::Algorithm;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid config: {0}")]
    Invalid(String),

    #[error("{path}: {source}")]
    ReadConfig {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{algorithm} budget {budget} seed {seed}: {source}")]
    Triple {
        algorithm: Algorithm,
        budget: f64,
        seed: u64,
        #[source]
        source: pnp_core::Error,
    },

    #[error("seed {seed}: {source}")]
    Problem {
        seed: u64,
        #[source]
        source: pnp_core::Error,
    },

    #[error(transparent)]
    Core(#[from] pnp_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl BenchError {
    /// Process exit status: 2 for anything wrong with the configuration,
    /// 1 for failures while running it.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Parse { .. } | BenchError::Invalid(_) | BenchError::ReadConfig { .. } => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
