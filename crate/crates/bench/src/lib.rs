//! Experiment harness for `pnp-core`: configuration files, synthetic
//! phantoms, and seeded end-to-end benchmark runs.

pub mod config;
pub mod error;
pub mod experiment;
pub mod phantom;

pub use config::ExperimentConfig;
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, ExperimentReport, RunOptions};
pub use phantom::{make_phantom, PhantomKind, PhantomParams};
