//! Plug-and-play iterations built on the denoiser-gradient operator
//! `P(x) = denoise(x − γ∇D(x))`.
//!
//! * ISTA: `x ← P(x)`.
//! * FISTA: `x ← P(s)` followed by the momentum update on `s` with the
//!   `q ← ½(1 + √(1 + 4q²))` recurrence.
//! * SGD: ISTA with `∇D` replaced by a minibatch average of `b` component
//!   gradients. No momentum.
//! * ADMM: exact quadratic x-solve, denoise, dual update.
//!
//! Budget is counted in component-gradient evaluations divided by `k`, so
//! a batch step costs 1 and an SGD step costs `b/k`.

use std::str::FromStr;
use std::time::Instant;

use crate::denoisers::Denoiser;
use crate::error::{Error, Result};
use crate::fidelity::{FidelityTerm, NormalSolver, Sampler};
use crate::signal::{check_len, l2_distance, snr_db, IterateTrace, Signal, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Ista,
    Fista,
    Sgd,
    Admm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Ista, Algorithm::Fista, Algorithm::Sgd, Algorithm::Admm];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Ista => "ista",
            Algorithm::Fista => "fista",
            Algorithm::Sgd => "sgd",
            Algorithm::Admm => "admm",
        }
    }

    pub fn is_batch(&self) -> bool {
        !matches!(self, Algorithm::Sgd)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm `{s}`")))
    }
}

/// How SGD draws its minibatches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// I.i.d. uniform with replacement, seeded from [`SolverConfig::seed`].
    #[default]
    Uniform,
    /// Deterministic round-robin; with `b = k` SGD reduces to ISTA.
    Cyclic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    pub minibatch: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub admm_rho: f64,
    pub sampling: Sampling,
}

impl SolverConfig {
    /// Step size `gamma`, ADMM penalty `1/gamma`, `b = 1`, 1000 iterations.
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            minibatch: 1,
            max_iters: 1000,
            seed: 0,
            admm_rho: 1.0 / gamma,
            sampling: Sampling::Uniform,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.admm_rho > 0.0 && self.admm_rho.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "admm_rho must be positive, got {}",
                self.admm_rho
            )));
        }
        if self.minibatch == 0 || self.minibatch > k {
            return Err(Error::InvalidParameter(format!(
                "minibatch size must lie in 1..={k}, got {}",
                self.minibatch
            )));
        }
        Ok(())
    }
}

/// `1/L` with `L` the largest eigenvalue of `AᵀA` (power iteration,
/// 50 iterations, relative tolerance 1e-9).
pub fn default_step_size(f: &FidelityTerm) -> Result<f64> {
    let l = f.lipschitz(50, 1e-9)?;
    if l <= 0.0 {
        return Err(Error::InvalidParameter("forward operator is zero".into()));
    }
    Ok(1.0 / l)
}

#[derive(Debug, Clone)]
struct AdmmState {
    x: Signal,
    v: Signal,
    u: Signal,
    solver: Option<NormalSolver>,
}

#[derive(Debug, Clone)]
pub struct SolverState {
    x_curr: Signal,
    x_prev: Signal,
    s_curr: Signal,
    q_curr: f64,
    q_prev: f64,
    iter: usize,
    k: usize,
    component_evals: u64,
    sampler: Option<Sampler>,
    admm: Option<AdmmState>,
}

impl SolverState {
    /// Starting state at `x0`: `s = x0`, `q = 1`, ADMM `v = x0`, `u = 0`.
    pub fn new(algorithm: Algorithm, f: &FidelityTerm, config: &SolverConfig, x0: &Signal) -> Result<Self> {
        if x0.shape() != f.input_shape() {
            return Err(Error::Shape(format!(
                "start signal has shape {}, model expects {}",
                x0.shape(),
                f.input_shape()
            )));
        }
        let sampler = match (algorithm, config.sampling) {
            (Algorithm::Sgd, Sampling::Uniform) => Some(Sampler::uniform(f.k(), config.minibatch, config.seed)?),
            (Algorithm::Sgd, Sampling::Cyclic) => Some(Sampler::cyclic(f.k(), config.minibatch)?),
            _ => None,
        };
        let admm = (algorithm == Algorithm::Admm).then(|| AdmmState {
            x: x0.clone(),
            v: x0.clone(),
            u: Signal::zeros(x0.shape()),
            solver: None,
        });
        Ok(Self {
            x_curr: x0.clone(),
            x_prev: x0.clone(),
            s_curr: x0.clone(),
            q_curr: 1.0,
            q_prev: 1.0,
            iter: 0,
            k: f.k(),
            component_evals: 0,
            sampler,
            admm,
        })
    }

    /// Current iterate (the denoiser output for every algorithm).
    pub fn x(&self) -> &Signal {
        &self.x_curr
    }

    pub fn x_prev(&self) -> &Signal {
        &self.x_prev
    }

    pub fn s(&self) -> &Signal {
        &self.s_curr
    }

    pub fn q(&self) -> (f64, f64) {
        (self.q_curr, self.q_prev)
    }

    pub fn iter(&self) -> usize {
        self.iter
    }

    pub fn component_evals(&self) -> u64 {
        self.component_evals
    }

    pub fn budget_consumed(&self) -> f64 {
        self.component_evals as f64 / self.k as f64
    }

    /// ADMM `(x, v, u)`, if this is an ADMM state.
    pub fn admm_vars(&self) -> Option<(&Signal, &Signal, &Signal)> {
        self.admm.as_ref().map(|a| (&a.x, &a.v, &a.u))
    }

    /// Replaces the SGD sampler, e.g. with a scripted one in tests.
    pub fn set_sampler(&mut self, sampler: Sampler) {
        self.sampler = Some(sampler);
    }

    fn advance(&mut self, x_next: Signal, evals: u64) -> Result<()> {
        self.iter += 1;
        self.component_evals += evals;
        if !x_next.is_finite() {
            return Err(Error::Diverged { iter: self.iter });
        }
        self.x_prev = std::mem::replace(&mut self.x_curr, x_next);
        Ok(())
    }
}

/// `P(x) = denoise(x − γ∇D(x))`.
pub fn operator_p(f: &FidelityTerm, d: &Denoiser, gamma: f64, x: &Signal) -> Result<Signal> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let g = f.full_gradient(x)?;
    d.apply(&x.add_scaled(-gamma, &g)?)
}

/// `‖x − P(x)‖`.
pub fn fixed_point_residual(f: &FidelityTerm, d: &Denoiser, gamma: f64, x: &Signal) -> Result<f64> {
    l2_distance(x, &operator_p(f, d, gamma, x)?)
}

pub fn step_pnp_ista(state: &mut SolverState, f: &FidelityTerm, d: &Denoiser, config: &SolverConfig) -> Result<()> {
    let x_next = operator_p(f, d, config.gamma, &state.s_curr)?;
    state.s_curr = x_next.clone();
    state.advance(x_next, f.k() as u64)
}

pub fn step_pnp_fista(state: &mut SolverState, f: &FidelityTerm, d: &Denoiser, config: &SolverConfig) -> Result<()> {
    let x_next = operator_p(f, d, config.gamma, &state.s_curr)?;
    state.q_prev = state.q_curr;
    state.q_curr = 0.5 * (1.0 + (1.0 + 4.0 * state.q_prev * state.q_prev).sqrt());
    let momentum = (state.q_prev - 1.0) / state.q_curr;
    let delta = x_next.add_scaled(-1.0, &state.x_curr)?;
    state.s_curr = x_next.add_scaled(momentum, &delta)?;
    state.advance(x_next, f.k() as u64)
}

pub fn step_pnp_sgd(state: &mut SolverState, f: &FidelityTerm, d: &Denoiser, config: &SolverConfig) -> Result<()> {
    let sampler = match state.sampler.as_mut() {
        Some(s) => s,
        None => state
            .sampler
            .insert(Sampler::uniform(f.k(), config.minibatch, config.seed)?),
    };
    let (g, drawn) = f.minibatch_gradient(sampler, &state.x_curr)?;
    let x_next = d.apply(&state.x_curr.add_scaled(-config.gamma, &g)?)?;
    state.s_curr = x_next.clone();
    state.advance(x_next, drawn.len() as u64)
}

pub fn step_pnp_admm(state: &mut SolverState, f: &FidelityTerm, d: &Denoiser, config: &SolverConfig) -> Result<()> {
    let rho = config.admm_rho;
    let admm = state.admm.get_or_insert_with(|| AdmmState {
        x: state.x_curr.clone(),
        v: state.x_curr.clone(),
        u: Signal::zeros(state.x_curr.shape()),
        solver: None,
    });
    if admm.solver.as_ref().is_none_or(|s| s.rho() != rho) {
        admm.solver = Some(f.regularized_solver(rho)?);
    }
    let solver = admm.solver.as_ref().expect("solver prepared above");
    let x = solver.solve(&admm.v.add_scaled(-1.0, &admm.u)?)?;
    let v = d.apply(&x.add_scaled(1.0, &admm.u)?)?;
    let u = admm.u.add_scaled(1.0, &x.add_scaled(-1.0, &v)?)?;
    admm.x = x;
    admm.u = u;
    admm.v = v.clone();
    state.s_curr = v.clone();
    state.advance(v, f.k() as u64)
}

pub fn step(
    algorithm: Algorithm,
    state: &mut SolverState,
    f: &FidelityTerm,
    d: &Denoiser,
    config: &SolverConfig,
) -> Result<()> {
    match algorithm {
        Algorithm::Ista => step_pnp_ista(state, f, d, config),
        Algorithm::Fista => step_pnp_fista(state, f, d, config),
        Algorithm::Sgd => step_pnp_sgd(state, f, d, config),
        Algorithm::Admm => step_pnp_admm(state, f, d, config),
    }
}

/// Component evaluations one step of `algorithm` consumes.
pub fn step_cost(algorithm: Algorithm, k: usize, config: &SolverConfig) -> u64 {
    match algorithm {
        Algorithm::Sgd => config.minibatch as u64,
        _ => k as u64,
    }
}

/// Iterates `P` from `x0` until `‖x − P(x)‖ ≤ tol` and returns that `x`.
pub fn find_fixed_point(
    f: &FidelityTerm,
    d: &Denoiser,
    gamma: f64,
    x0: &Signal,
    tol: f64,
    max_iters: usize,
) -> Result<Signal> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    check_len(f.input_shape().len(), x0.len())?;
    let mut x = x0.clone();
    let mut residual = f64::INFINITY;
    for iter in 0..=max_iters {
        let px = operator_p(f, d, gamma, &x)?;
        residual = l2_distance(&x, &px)?;
        if residual <= tol {
            return Ok(x);
        }
        if !px.is_finite() {
            return Err(Error::Diverged { iter });
        }
        x = px;
    }
    Err(Error::NotConverged {
        iters: max_iters,
        residual,
    })
}

/// Runs `algorithm` from `x0` until `config.max_iters` steps or until the
/// next step would push the consumed budget past `budget_limit`.
///
/// Each record holds the full-gradient fixed-point residual `‖x − P(x)‖`
/// of the new iterate, its SNR against `truth` (NaN without one), and the
/// cumulative budget.
pub fn run(
    algorithm: Algorithm,
    f: &FidelityTerm,
    d: &Denoiser,
    config: &SolverConfig,
    x0: &Signal,
    truth: Option<&Signal>,
    budget_limit: Option<f64>,
) -> Result<(Signal, IterateTrace)> {
    let mut trace = IterateTrace::new();
    let start = Instant::now();
    let x = drive(algorithm, f, d, config, x0, budget_limit, |state| {
        let residual = fixed_point_residual(f, d, config.gamma, &state.x_curr)?;
        let snr = match truth {
            Some(t) => snr_db(t, &state.x_curr)?,
            None => f64::NAN,
        };
        trace.push(TraceRecord {
            iter: state.iter,
            fixed_point_residual: residual,
            snr_db: snr,
            budget_consumed: state.budget_consumed(),
            wall_ns: start.elapsed().as_nanos() as u64,
        });
        Ok(())
    })?;
    Ok((x, trace))
}

/// Same iterates as [`run`], without computing per-iteration diagnostics.
pub fn run_final(
    algorithm: Algorithm,
    f: &FidelityTerm,
    d: &Denoiser,
    config: &SolverConfig,
    x0: &Signal,
    budget_limit: Option<f64>,
) -> Result<(Signal, usize)> {
    let mut iters = 0;
    let x = drive(algorithm, f, d, config, x0, budget_limit, |state| {
        iters = state.iter;
        Ok(())
    })?;
    Ok((x, iters))
}

fn drive(
    algorithm: Algorithm,
    f: &FidelityTerm,
    d: &Denoiser,
    config: &SolverConfig,
    x0: &Signal,
    budget_limit: Option<f64>,
    mut observe: impl FnMut(&SolverState) -> Result<()>,
) -> Result<Signal> {
    config.validate(f.k())?;
    if let Some(b) = budget_limit {
        if !(b > 0.0) {
            return Err(Error::InvalidParameter(format!("budget must be positive, got {b}")));
        }
    }
    let mut state = SolverState::new(algorithm, f, config, x0)?;
    let cost = step_cost(algorithm, f.k(), config);
    // Compare in evaluation counts so b/k increments stay exact.
    let eval_limit = budget_limit.map(|b| b * f.k() as f64 * (1.0 + 1e-12));
    while state.iter < config.max_iters {
        if let Some(limit) = eval_limit {
            if (state.component_evals + cost) as f64 > limit {
                break;
            }
        }
        step(algorithm, &mut state, f, d, config)?;
        observe(&state)?;
    }
    Ok(state.x_curr)
}
