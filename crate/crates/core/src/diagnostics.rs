//! Convergence analysis over solver traces.

use std::collections::BTreeSet;
use std::io::Write;

use rayon::prelude::*;

use crate::denoisers::Denoiser;
use crate::error::{Error, Result};
use crate::fidelity::FidelityTerm;
use crate::signal::{fmt_f64, l2_distance, snr_db, IterateTrace, Signal};
use crate::solvers::{run, run_final, step_cost, Algorithm, SolverConfig};

/// Least-squares line through `(log t, log min_{j≤t} residual_j²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Range actually fitted, after any truncation.
    pub t_range: (usize, usize),
    pub r_squared: f64,
    /// First iteration in the requested range whose running minimum was
    /// exactly zero, if the range had to be cut there.
    pub truncated_at: Option<usize>,
}

pub fn fit_rate(trace: &IterateTrace, t_min: usize, t_max: usize) -> Result<RateFit> {
    if t_min < 1 || t_max <= t_min {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= t_min < t_max, got [{t_min}, {t_max}]"
        )));
    }
    let mut running = f64::INFINITY;
    let mut points = Vec::new();
    let mut truncated_at = None;
    for r in trace.records() {
        if r.iter > t_max {
            break;
        }
        running = running.min(r.fixed_point_residual * r.fixed_point_residual);
        if r.iter < t_min {
            continue;
        }
        if running == 0.0 {
            truncated_at = Some(r.iter);
            break;
        }
        points.push(((r.iter as f64).ln(), running.ln()));
    }
    if truncated_at.is_none() && trace.last().is_none_or(|r| r.iter < t_max) {
        return Err(Error::InvalidParameter(format!("trace does not reach t = {t_max}")));
    }
    if points.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "only {} usable points in [{t_min}, {t_max}]",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    let last = truncated_at.map_or(t_max, |t| t - 1);
    Ok(RateFit {
        slope,
        intercept,
        t_range: (t_min, last),
        r_squared,
        truncated_at,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSummary {
    pub algorithm: Algorithm,
    pub b: usize,
    /// Sorted ascending.
    pub seeds: Vec<u64>,
    pub mean_final_sq_dist: f64,
    /// Sample standard deviation (n − 1 denominator).
    pub std_final_sq_dist: f64,
    /// NaN when no ground truth was supplied.
    pub mean_final_snr: f64,
}

/// Runs `algorithm` once per seed from `x = 0` and summarizes the final
/// squared distance to `x_star` (and SNR against `truth`, when given).
///
/// Runs execute in parallel; statistics fold over results in seed order,
/// so the summary does not depend on the order of `seeds`.
pub fn ensemble(
    algorithm: Algorithm,
    f: &FidelityTerm,
    d: &Denoiser,
    config: &SolverConfig,
    seeds: &[u64],
    x_star: &Signal,
    truth: Option<&Signal>,
) -> Result<EnsembleSummary> {
    let unique: BTreeSet<u64> = seeds.iter().copied().collect();
    if unique.len() < 2 {
        return Err(Error::InvalidParameter(
            "ensemble needs at least two distinct seeds".into(),
        ));
    }
    if unique.len() != seeds.len() {
        return Err(Error::InvalidParameter("ensemble seeds must be distinct".into()));
    }
    let seeds: Vec<u64> = unique.into_iter().collect();
    let x0 = Signal::zeros(f.input_shape());
    let outcomes: Vec<(f64, f64)> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = SolverConfig { seed, ..*config };
            let wrap = |e| Error::Seed {
                seed,
                source: Box::new(e),
            };
            let (x, _) = run_final(algorithm, f, d, &cfg, &x0, None).map_err(wrap)?;
            let dist = l2_distance(&x, x_star).map_err(wrap)?;
            let snr = match truth {
                Some(t) => snr_db(t, &x).map_err(wrap)?,
                None => f64::NAN,
            };
            Ok((dist * dist, snr))
        })
        .collect::<Result<_>>()?;
    let n = outcomes.len() as f64;
    let mean = outcomes.iter().map(|o| o.0).sum::<f64>() / n;
    let var = outcomes.iter().map(|o| (o.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let mean_snr = outcomes.iter().map(|o| o.1).sum::<f64>() / n;
    Ok(EnsembleSummary {
        algorithm,
        b: config.minibatch,
        seeds,
        mean_final_sq_dist: mean,
        std_final_sq_dist: var.sqrt(),
        mean_final_snr: mean_snr,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub algorithm: Algorithm,
    pub final_snr_db: f64,
    pub iterations: usize,
    pub budget_consumed: f64,
}

/// Runs every algorithm under the same measurement budget from `x = 0`.
pub fn budget_comparison(
    algorithms: &[Algorithm],
    f: &FidelityTerm,
    d: &Denoiser,
    config: &SolverConfig,
    budget: f64,
    truth: &Signal,
) -> Result<Vec<ComparisonRow>> {
    if !(budget > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "budget must be positive, got {budget}"
        )));
    }
    let x0 = Signal::zeros(f.input_shape());
    algorithms
        .iter()
        .map(|&algorithm| {
            let (x, trace) = run(algorithm, f, d, config, &x0, Some(truth), Some(budget))?;
            Ok(ComparisonRow {
                algorithm,
                final_snr_db: snr_db(truth, &x)?,
                iterations: trace.len(),
                budget_consumed: trace.last().map_or(0.0, |r| r.budget_consumed),
            })
        })
        .collect()
}

/// Per-step budget cost of `algorithm`.
pub fn per_step_budget(algorithm: Algorithm, k: usize, config: &SolverConfig) -> f64 {
    step_cost(algorithm, k, config) as f64 / k as f64
}

pub const SUMMARY_CSV_HEADER: &str = "algorithm,b,budget,final_snr_db,final_sq_dist,iters";

/// One row of the experiment summary. `b` is the number of component
/// gradients evaluated per iteration (`k` for batch algorithms).
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub b: usize,
    pub budget: f64,
    pub final_snr_db: f64,
    pub final_sq_dist: f64,
    pub iters: usize,
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut out: W) -> Result<()> {
    writeln!(out, "{SUMMARY_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.algorithm,
            r.b,
            fmt_f64(r.budget),
            fmt_f64(r.final_snr_db),
            fmt_f64(r.final_sq_dist),
            r.iters
        )?;
    }
    Ok(())
}
