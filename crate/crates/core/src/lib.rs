//! Plug-and-play signal reconstruction.
//!
//! Batch (ISTA, FISTA, ADMM) and minibatch (SGD) solvers that take an
//! arbitrary denoiser in place of a proximal operator, over data-fidelity
//! terms that decompose into `k` measurement components.

pub mod denoisers;
pub mod diagnostics;
pub mod error;
pub mod fidelity;
pub mod rng;
pub mod signal;
pub mod solvers;
pub mod spectral;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use denoisers::{nonexpansiveness_probe, prox_l1, Denoiser, DenoiserKind, Transform};
pub use diagnostics::{budget_comparison, ensemble, fit_rate, EnsembleSummary, RateFit, SummaryRow};
pub use error::{Error, Result};
pub use fidelity::{FidelityTerm, ForwardModel, L1Regularizer, MeasurementSet, MinibatchSampler, Sampler};
pub use signal::{l2_distance, snr_db, IterateTrace, Shape, Signal, TraceRecord};
pub use solvers::{
    default_step_size, find_fixed_point, operator_p, run, Algorithm, Sampling, SolverConfig, SolverState,
};
