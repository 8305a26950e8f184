//! Experiment configuration files.
//!
//! A config is UTF-8 text with one `section.key = value` assignment per
//! line. Blank lines are ignored and `#` starts a comment that runs to the
//! end of the line. Keys are case-sensitive; unknown or repeated keys are
//! errors, and omitted keys keep their [`ExperimentConfig::default`] value.
//! Lists are comma-separated.

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use pnp_core::{Algorithm, Denoiser, Sampling, Shape, SolverConfig, Transform};

use crate::error::{BenchError, Result};
use crate::phantom::{PhantomKind, PhantomParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    GaussianCs,
    Blur,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenoiserChoice {
    Identity,
    SoftThreshold,
    SoftThresholdDct,
    GaussianSmooth,
}

/// A parameter that is either given explicitly or derived from the problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto {
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub model: ModelChoice,
    pub shape: Shape,
    /// Number of measurements (Gaussian CS only; blur measures every pixel).
    pub m: usize,
    pub k: usize,
    pub noise_sigma: f64,
    pub phantom: PhantomKind,
    pub sparsity: f64,
    pub block: usize,
    pub blur_sigma: f64,
    pub blur_radius: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserConfig {
    pub kind: DenoiserChoice,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    /// `auto` is `1/L`.
    pub gamma: Auto,
    /// `auto` is `1/gamma`.
    pub admm_rho: Auto,
    pub minibatch: usize,
    pub max_iters: usize,
    pub sampling: Sampling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub algorithms: Vec<Algorithm>,
    pub budgets: Vec<f64>,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    /// Record wall-clock time in traces. Off by default so that reruns
    /// produce byte-identical files.
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub denoiser: DenoiserConfig,
    pub solver: SolverSection,
    pub experiment: ExperimentSection,
}

impl Default for ExperimentConfig {
    /// Gaussian compressed sensing of a sparse spike train (`n = 256`,
    /// `m = 128`, `k = 50`) with a soft-threshold denoiser, all four
    /// algorithms at budgets 10 and 30 over five seeds.
    fn default() -> Self {
        Self {
            problem: ProblemConfig {
                model: ModelChoice::GaussianCs,
                shape: Shape::Flat(256),
                m: 128,
                k: 50,
                noise_sigma: 0.01,
                phantom: PhantomKind::SparseSpikes,
                sparsity: 0.05,
                block: 8,
                blur_sigma: 1.0,
                blur_radius: 2,
            },
            denoiser: DenoiserConfig {
                kind: DenoiserChoice::SoftThreshold,
                sigma: 0.0025,
            },
            solver: SolverSection {
                gamma: Auto::Value(0.05),
                admm_rho: Auto::Auto,
                minibatch: 5,
                max_iters: 1_000_000,
                sampling: Sampling::Uniform,
            },
            experiment: ExperimentSection {
                algorithms: Algorithm::ALL.to_vec(),
                budgets: vec![10.0, 30.0],
                seeds: vec![1, 2, 3, 4, 5],
                output: PathBuf::from("results"),
                timing: false,
            },
        }
    }
}

trait Keyword: Sized + Copy + PartialEq + 'static {
    const TABLE: &'static [(&'static str, Self)];

    fn keyword(&self) -> &'static str {
        Self::TABLE
            .iter()
            .find(|(_, v)| v == self)
            .map(|(k, _)| *k)
            .expect("complete table")
    }

    fn from_keyword(s: &str) -> std::result::Result<Self, String> {
        Self::TABLE
            .iter()
            .find(|(k, _)| *k == s)
            .map(|(_, v)| *v)
            .ok_or_else(|| {
                let options: Vec<&str> = Self::TABLE.iter().map(|(k, _)| *k).collect();
                format!("`{s}` is not one of {}", options.join(", "))
            })
    }
}

impl Keyword for ModelChoice {
    const TABLE: &'static [(&'static str, Self)] =
        &[("gaussian_cs", ModelChoice::GaussianCs), ("blur", ModelChoice::Blur)];
}

impl Keyword for DenoiserChoice {
    const TABLE: &'static [(&'static str, Self)] = &[
        ("identity", DenoiserChoice::Identity),
        ("soft_threshold", DenoiserChoice::SoftThreshold),
        ("soft_threshold_dct", DenoiserChoice::SoftThresholdDct),
        ("gaussian_smooth", DenoiserChoice::GaussianSmooth),
    ];
}

impl Keyword for Sampling {
    const TABLE: &'static [(&'static str, Self)] = &[("uniform", Sampling::Uniform), ("cyclic", Sampling::Cyclic)];
}

impl fmt::Display for Auto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Auto::Auto => f.write_str("auto"),
            Auto::Value(v) => write!(f, "{v}"),
        }
    }
}

impl DenoiserConfig {
    pub fn build(&self) -> pnp_core::Result<Denoiser> {
        match self.kind {
            DenoiserChoice::Identity => Ok(Denoiser::identity()),
            DenoiserChoice::SoftThreshold => Denoiser::soft_threshold(Transform::Identity, self.sigma),
            DenoiserChoice::SoftThresholdDct => Denoiser::soft_threshold(Transform::Dct2, self.sigma),
            DenoiserChoice::GaussianSmooth => Denoiser::gaussian_smooth(self.sigma),
        }
    }
}

impl ProblemConfig {
    pub fn phantom_params(&self) -> PhantomParams {
        PhantomParams {
            sparsity: self.sparsity,
            block: self.block,
        }
    }

    /// Length of the measurement vector.
    pub fn measurements(&self) -> usize {
        match self.model {
            ModelChoice::GaussianCs => self.m,
            ModelChoice::Blur => self.shape.len(),
        }
    }

    /// Number of rows available for splitting into components.
    fn splittable_rows(&self) -> usize {
        match (self.model, self.shape) {
            (ModelChoice::GaussianCs, _) => self.m,
            (ModelChoice::Blur, Shape::Grid { height, .. }) => height,
            (ModelChoice::Blur, Shape::Flat(_)) => 0,
        }
    }
}

impl SolverSection {
    /// Core solver settings for a resolved step size and run seed.
    pub fn solver_config(&self, gamma: f64, seed: u64) -> SolverConfig {
        let mut cfg = SolverConfig::new(gamma);
        cfg.minibatch = self.minibatch;
        cfg.max_iters = self.max_iters;
        cfg.sampling = self.sampling;
        cfg.seed = seed;
        if let Auto::Value(rho) = self.admm_rho {
            cfg.admm_rho = rho;
        }
        cfg
    }
}

fn invalid(msg: impl Into<String>) -> BenchError {
    BenchError::Invalid(msg.into())
}

fn positive_finite(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn nonnegative_finite(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be nonnegative and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| BenchError::Parse { line: line_no, message };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `section.key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(err(format!("`{key}` is set more than once")));
            }
            cfg.set(key, value).map_err(err)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let p = &mut self.problem;
        let s = &mut self.solver;
        let e = &mut self.experiment;
        match key {
            "problem.model" => p.model = ModelChoice::from_keyword(value)?,
            "problem.shape" => p.shape = value.parse().map_err(|e: pnp_core::Error| e.to_string())?,
            "problem.m" => p.m = number(value)?,
            "problem.k" => p.k = number(value)?,
            "problem.noise_sigma" => p.noise_sigma = number(value)?,
            "problem.phantom" => p.phantom = value.parse().map_err(|e: pnp_core::Error| e.to_string())?,
            "problem.sparsity" => p.sparsity = number(value)?,
            "problem.block" => p.block = number(value)?,
            "problem.blur_sigma" => p.blur_sigma = number(value)?,
            "problem.blur_radius" => p.blur_radius = number(value)?,
            "denoiser.kind" => self.denoiser.kind = DenoiserChoice::from_keyword(value)?,
            "denoiser.sigma" => self.denoiser.sigma = number(value)?,
            "solver.gamma" => s.gamma = auto(value)?,
            "solver.admm_rho" => s.admm_rho = auto(value)?,
            "solver.minibatch" => s.minibatch = number(value)?,
            "solver.max_iters" => s.max_iters = number(value)?,
            "solver.sampling" => s.sampling = Sampling::from_keyword(value)?,
            "experiment.algorithms" => {
                e.algorithms = list(value, |v| v.parse::<Algorithm>().map_err(|e| e.to_string()))?
            }
            "experiment.budgets" => e.budgets = list(value, number)?,
            "experiment.seeds" => e.seeds = list(value, number)?,
            "experiment.output" => e.output = PathBuf::from(value),
            "experiment.timing" => e.timing = number(value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Renders every key, so that `parse(emit(c)) == c`.
    pub fn emit(&self) -> String {
        let p = &self.problem;
        let s = &self.solver;
        let e = &self.experiment;
        let join = |items: Vec<String>| items.join(", ");
        let mut out = String::new();
        let mut put = |key: &str, value: String| {
            writeln!(out, "{key} = {value}").expect("writing to a String");
        };
        put("problem.model", p.model.keyword().into());
        put("problem.shape", p.shape.to_string());
        put("problem.m", p.m.to_string());
        put("problem.k", p.k.to_string());
        put("problem.noise_sigma", p.noise_sigma.to_string());
        put("problem.phantom", p.phantom.to_string());
        put("problem.sparsity", p.sparsity.to_string());
        put("problem.block", p.block.to_string());
        put("problem.blur_sigma", p.blur_sigma.to_string());
        put("problem.blur_radius", p.blur_radius.to_string());
        put("denoiser.kind", self.denoiser.kind.keyword().into());
        put("denoiser.sigma", self.denoiser.sigma.to_string());
        put("solver.gamma", s.gamma.to_string());
        put("solver.admm_rho", s.admm_rho.to_string());
        put("solver.minibatch", s.minibatch.to_string());
        put("solver.max_iters", s.max_iters.to_string());
        put("solver.sampling", s.sampling.keyword().into());
        put(
            "experiment.algorithms",
            join(e.algorithms.iter().map(|a| a.to_string()).collect()),
        );
        put(
            "experiment.budgets",
            join(e.budgets.iter().map(|b| b.to_string()).collect()),
        );
        put(
            "experiment.seeds",
            join(e.seeds.iter().map(|s| s.to_string()).collect()),
        );
        put("experiment.output", e.output.display().to_string());
        put("experiment.timing", e.timing.to_string());
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        let s = &self.solver;
        let e = &self.experiment;

        if p.shape.is_empty() {
            return Err(invalid("problem.shape is empty"));
        }
        match (p.model, p.shape) {
            (ModelChoice::GaussianCs, _) if p.m == 0 => return Err(invalid("problem.m must be positive")),
            (ModelChoice::Blur, Shape::Flat(_)) => {
                return Err(invalid("problem.model = blur needs a 2D problem.shape (HxW)"))
            }
            (ModelChoice::Blur, Shape::Grid { height, width }) => {
                positive_finite("problem.blur_sigma", p.blur_sigma)?;
                let side = 2 * p.blur_radius + 1;
                if side > height || side > width {
                    return Err(invalid(format!(
                        "blur kernel of radius {} does not fit a {height}x{width} image",
                        p.blur_radius
                    )));
                }
            }
            _ => {}
        }
        if p.k == 0 || p.k > p.splittable_rows() {
            return Err(invalid(format!(
                "problem.k must lie in 1..={}, got {}",
                p.splittable_rows(),
                p.k
            )));
        }
        nonnegative_finite("problem.noise_sigma", p.noise_sigma)?;
        if p.phantom == PhantomKind::SparseSpikes && !(p.sparsity > 0.0 && p.sparsity <= 1.0) {
            return Err(invalid(format!(
                "problem.sparsity must lie in (0, 1], got {}",
                p.sparsity
            )));
        }
        if p.block == 0 {
            return Err(invalid("problem.block must be positive"));
        }
        if p.phantom == PhantomKind::CheckerImage && p.shape.dims().is_none() {
            return Err(invalid("problem.phantom = checker_image needs a 2D problem.shape"));
        }

        nonnegative_finite("denoiser.sigma", self.denoiser.sigma)?;
        let two_d = matches!(
            self.denoiser.kind,
            DenoiserChoice::GaussianSmooth | DenoiserChoice::SoftThresholdDct
        );
        if two_d && p.model != ModelChoice::Blur {
            return Err(invalid(format!(
                "denoiser.kind = {} works on images and needs problem.model = blur",
                self.denoiser.kind.keyword()
            )));
        }

        if let Auto::Value(g) = s.gamma {
            positive_finite("solver.gamma", g)?;
        }
        if let Auto::Value(r) = s.admm_rho {
            positive_finite("solver.admm_rho", r)?;
        }
        if s.minibatch == 0 || s.minibatch > p.k {
            return Err(invalid(format!(
                "solver.minibatch must lie in 1..={}, got {}",
                p.k, s.minibatch
            )));
        }
        if s.max_iters == 0 {
            return Err(invalid("solver.max_iters must be positive"));
        }

        if e.algorithms.is_empty() {
            return Err(invalid("experiment.algorithms is empty"));
        }
        if e.algorithms.iter().collect::<HashSet<_>>().len() != e.algorithms.len() {
            return Err(invalid("experiment.algorithms lists an algorithm twice"));
        }
        if e.budgets.is_empty() {
            return Err(invalid("experiment.budgets is empty"));
        }
        for &b in &e.budgets {
            positive_finite("every budget", b)?;
        }
        if e.budgets.iter().map(|b| b.to_bits()).collect::<HashSet<_>>().len() != e.budgets.len() {
            return Err(invalid("experiment.budgets lists a budget twice"));
        }
        if e.seeds.is_empty() {
            return Err(invalid("experiment.seeds is empty"));
        }
        if e.seeds.iter().collect::<HashSet<_>>().len() != e.seeds.len() {
            return Err(invalid("experiment.seeds lists a seed twice"));
        }
        if e.output.as_os_str().is_empty() {
            return Err(invalid("experiment.output is empty"));
        }
        Ok(())
    }
}

impl FromStr for ExperimentConfig {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

fn number<T: FromStr>(value: &str) -> std::result::Result<T, String>
where
    T::Err: fmt::Display,
{
    value.parse().map_err(|e| format!("`{value}`: {e}"))
}

fn auto(value: &str) -> std::result::Result<Auto, String> {
    if value == "auto" {
        Ok(Auto::Auto)
    } else {
        number(value).map(Auto::Value)
    }
}

fn list<T>(value: &str, item: impl Fn(&str) -> std::result::Result<T, String>) -> std::result::Result<Vec<T>, String> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| item(v.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.emit()).unwrap(), cfg);
    }

    #[test]
    fn comments_and_defaults() {
        let cfg =
            ExperimentConfig::parse("# header\n\n  problem.k = 10   # trailing\nexperiment.algorithms = sgd,ista\n")
                .unwrap();
        assert_eq!(cfg.problem.k, 10);
        assert_eq!(cfg.experiment.algorithms, vec![Algorithm::Sgd, Algorithm::Ista]);
        assert_eq!(cfg.problem.m, 128);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = ExperimentConfig::parse("problem.k = 3\nProblem.k = 4\n").unwrap_err();
        assert!(matches!(err, BenchError::Parse { line: 2, .. }), "{err}");
        let err = ExperimentConfig::parse("problem.k = 3\nproblem.k = 4\n").unwrap_err();
        assert!(matches!(err, BenchError::Parse { line: 2, .. }));
        assert!(ExperimentConfig::parse("problem.k 3").is_err());
        assert!(ExperimentConfig::parse("solver.gamma = fast").is_err());
        assert!(ExperimentConfig::parse("denoiser.kind = bm3d").is_err());
    }

    #[test]
    fn validation_rules() {
        let bad = |text: &str| ExperimentConfig::parse(text).unwrap().validate().is_err();
        assert!(bad("experiment.algorithms ="));
        assert!(bad("experiment.budgets = 10, 0"));
        assert!(bad("experiment.seeds = 1, 1"));
        assert!(bad("solver.minibatch = 51"));
        assert!(bad("problem.model = blur"));
        assert!(bad("problem.phantom = checker_image"));
        assert!(bad("solver.gamma = -1"));
        assert!(!bad(
            "problem.model = blur\nproblem.shape = 16x16\nproblem.k = 4\nsolver.minibatch = 2"
        ));
    }
}
