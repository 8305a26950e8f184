//! Running a configured experiment end to end.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use pnp_core::diagnostics::write_summary_csv;
use pnp_core::rng::derive_seed;
use pnp_core::spectral::Kernel2d;
use pnp_core::{
    default_step_size, find_fixed_point, l2_distance, run, snr_db, Algorithm, Denoiser, FidelityTerm, ForwardModel,
    Shape, Signal, SummaryRow,
};
use rayon::prelude::*;

use crate::config::{Auto, ExperimentConfig, ModelChoice};
use crate::error::{BenchError, Result};
use crate::phantom::make_phantom;

const PHANTOM_STREAM: u64 = 0;
const MATRIX_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;
const SAMPLER_STREAM: u64 = 3;

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITERS: usize = 200_000;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces `experiment.output`.
    pub outdir: Option<PathBuf>,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    /// Added (wrapping) to every configured seed.
    pub seed_offset: u64,
}

impl RunOptions {
    /// Reads `PNP_SEED_OFFSET` (default 0).
    pub fn seed_offset_from_env() -> Result<u64> {
        match std::env::var("PNP_SEED_OFFSET") {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|_| BenchError::Invalid(format!("PNP_SEED_OFFSET must be an unsigned integer, got `{v}`"))),
            Err(std::env::VarError::NotPresent) => Ok(0),
            Err(e) => Err(BenchError::Invalid(format!("PNP_SEED_OFFSET: {e}"))),
        }
    }
}

/// One ground-truth/measurement draw, shared by every algorithm and budget
/// that runs with the same seed.
#[derive(Debug, Clone)]
pub struct Problem {
    pub seed: u64,
    pub truth: Signal,
    pub fidelity: FidelityTerm,
    pub gamma: f64,
    /// Fixed point of the full-gradient PnP operator at `gamma`.
    pub x_star: Signal,
}

pub fn build_problem(config: &ExperimentConfig, seed: u64) -> pnp_core::Result<Problem> {
    let p = &config.problem;
    let truth = make_phantom(
        p.phantom,
        p.shape,
        p.phantom_params(),
        derive_seed(seed, PHANTOM_STREAM),
    )?;
    let (truth, model) = match p.model {
        ModelChoice::GaussianCs => {
            let n = p.shape.len();
            let matrix_seed = derive_seed(seed, MATRIX_STREAM);
            let model = ForwardModel::gaussian_cs(p.m, n, p.k, p.noise_sigma, matrix_seed)?;
            (truth.reshape(Shape::Flat(n))?, model)
        }
        ModelChoice::Blur => {
            let (h, w) = truth
                .shape()
                .dims()
                .ok_or_else(|| pnp_core::Error::Shape("blur needs a 2D shape".into()))?;
            let kernel = Kernel2d::gaussian(p.blur_sigma, p.blur_radius)?;
            (truth, ForwardModel::blur(kernel, h, w, p.k, p.noise_sigma)?)
        }
    };
    let measurements = model.simulate_measurements(&truth, derive_seed(seed, NOISE_STREAM))?;
    let fidelity = FidelityTerm::new(model, measurements)?;
    let gamma = match config.solver.gamma {
        Auto::Auto => default_step_size(&fidelity)?,
        Auto::Value(g) => g,
    };
    let denoiser = config.denoiser.build()?;
    let x0 = Signal::zeros(fidelity.input_shape());
    let x_star = find_fixed_point(&fidelity, &denoiser, gamma, &x0, FIXED_POINT_TOL, FIXED_POINT_MAX_ITERS)?;
    Ok(Problem {
        seed,
        truth,
        fidelity,
        gamma,
        x_star,
    })
}

/// Result of one (algorithm, budget, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleOutcome {
    pub algorithm: Algorithm,
    pub budget: f64,
    pub seed: u64,
    pub final_snr_db: f64,
    pub final_sq_dist: f64,
    pub iters: usize,
    pub trace_path: PathBuf,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub outdir: PathBuf,
    /// Ordered by configured algorithm, then configured budget, then seed.
    pub outcomes: Vec<TripleOutcome>,
    /// Seed-averaged rows, in the same order.
    pub summary: Vec<SummaryRow>,
}

pub fn trace_file_name(algorithm: Algorithm, budget: f64, seed: u64) -> String {
    format!("{algorithm}_b{budget}_s{seed}.csv")
}

/// Validates `config`, then runs every (algorithm, budget, seed) triple and
/// writes one trace CSV per triple plus `summary.csv`. Nothing is written
/// when validation fails.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<ExperimentReport> {
    config.validate()?;
    if options.jobs == Some(0) {
        return Err(BenchError::Invalid("--jobs must be positive".into()));
    }
    let denoiser = config
        .denoiser
        .build()
        .map_err(|e| BenchError::Invalid(e.to_string()))?;
    let outdir = options
        .outdir
        .clone()
        .unwrap_or_else(|| config.experiment.output.clone());
    let mut seeds: Vec<u64> = config
        .experiment
        .seeds
        .iter()
        .map(|s| s.wrapping_add(options.seed_offset))
        .collect();
    seeds.sort_unstable();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs.unwrap_or(0))
        .build()
        .map_err(|e| BenchError::Io(std::io::Error::other(e)))?;

    fs::create_dir_all(&outdir)?;
    let outcomes = pool.install(|| -> Result<Vec<TripleOutcome>> {
        let problems: Vec<Problem> = seeds
            .par_iter()
            .map(|&seed| build_problem(config, seed).map_err(|source| BenchError::Problem { seed, source }))
            .collect::<Result<_>>()?;

        let mut triples = Vec::new();
        for &algorithm in &config.experiment.algorithms {
            for &budget in &config.experiment.budgets {
                for problem in &problems {
                    triples.push((algorithm, budget, problem));
                }
            }
        }
        triples
            .into_par_iter()
            .map(|(algorithm, budget, problem)| {
                run_triple(config, &denoiser, &outdir, algorithm, budget, problem).map_err(|e| match e {
                    BenchError::Core(source) => BenchError::Triple {
                        algorithm,
                        budget,
                        seed: problem.seed,
                        source,
                    },
                    other => other,
                })
            })
            .collect()
    })?;

    let summary = summarize(config, &outcomes);
    let file = File::create(outdir.join("summary.csv"))?;
    write_summary_csv(&summary, BufWriter::new(file))?;
    Ok(ExperimentReport {
        outdir,
        outcomes,
        summary,
    })
}

fn run_triple(
    config: &ExperimentConfig,
    denoiser: &Denoiser,
    outdir: &Path,
    algorithm: Algorithm,
    budget: f64,
    problem: &Problem,
) -> Result<TripleOutcome> {
    let f = &problem.fidelity;
    let solver = config
        .solver
        .solver_config(problem.gamma, derive_seed(problem.seed, SAMPLER_STREAM));
    let x0 = Signal::zeros(f.input_shape());
    let (x, trace) = run(algorithm, f, denoiser, &solver, &x0, Some(&problem.truth), Some(budget))?;
    let trace = if config.experiment.timing {
        trace
    } else {
        trace.without_timing()
    };
    let trace_path = outdir.join(trace_file_name(algorithm, budget, problem.seed));
    let file = File::create(&trace_path).map_err(pnp_core::Error::from)?;
    trace.write_csv(BufWriter::new(file))?;
    let dist = l2_distance(&x, &problem.x_star)?;
    Ok(TripleOutcome {
        algorithm,
        budget,
        seed: problem.seed,
        final_snr_db: snr_db(&problem.truth, &x)?,
        final_sq_dist: dist * dist,
        iters: trace.len(),
        trace_path,
    })
}

/// One row per (algorithm, budget): final SNR and squared distance are
/// averaged over seeds, summed in ascending seed order.
fn summarize(config: &ExperimentConfig, outcomes: &[TripleOutcome]) -> Vec<SummaryRow> {
    let k = config.problem.k;
    let n_seeds = config.experiment.seeds.len();
    outcomes
        .chunks(n_seeds)
        .map(|group| {
            let first = &group[0];
            let mean = |f: fn(&TripleOutcome) -> f64| group.iter().map(f).sum::<f64>() / group.len() as f64;
            let iters = group.iter().map(|o| o.iters).max().unwrap_or(0);
            SummaryRow {
                algorithm: first.algorithm,
                b: if first.algorithm.is_batch() {
                    k
                } else {
                    config.solver.minibatch
                },
                budget: first.budget,
                final_snr_db: mean(|o| o.final_snr_db),
                final_sq_dist: mean(|o| o.final_sq_dist),
                iters,
            }
        })
        .collect()
}
