//! Forward models and component-decomposed data-fidelity terms.
//!
//! A fidelity term `D(x) = (1/k) Σᵢ Dᵢ(x)` splits the measurements into `k`
//! contiguous blocks. Each component is scaled as
//!
//! ```text
//! Dᵢ(x) = (k/2) ‖yᵢ − Aᵢ x‖²,   ∇Dᵢ(x) = k Aᵢᵀ (Aᵢ x − yᵢ)
//! ```
//!
//! so that `D(x) = ½‖y − Ax‖²` and `∇D(x) = Aᵀ(Ax − y)`.
//!
//! Two forward models are provided: a dense Gaussian compressed-sensing
//! matrix split row-wise, and a circular 2D blur whose components are
//! contiguous row-bands of the blurred image.

use std::collections::VecDeque;
use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng as _;
use rustfft::num_complex::Complex64;

use crate::denoisers::Transform;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, standard_normal_vec, Rng};
use crate::signal::{check_len, dot, norm, Shape, Signal};
use crate::spectral::{fft2, fft2_real, Kernel2d};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len(rows * cols, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Row-major entries.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Dense(DenseMatrix),
    Blur {
        kernel: Kernel2d,
        height: usize,
        width: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    GaussianCs,
    Blur,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::GaussianCs => "gaussian_cs",
            ModelKind::Blur => "blur",
        }
    }
}

/// Identifies the model a measurement set was produced for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelRef {
    pub kind: ModelKind,
    pub input_shape: Shape,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardModel {
    operator: Operator,
    /// Component bands in operator-row units (matrix rows, or image rows for blur).
    bands: Vec<Range<usize>>,
    noise_sigma: f64,
}

/// Splits `0..len` into `k` contiguous ranges whose sizes differ by at most one.
pub fn partition(len: usize, k: usize) -> Result<Vec<Range<usize>>> {
    if k == 0 || k > len {
        return Err(Error::InvalidParameter(format!(
            "cannot split {len} rows into {k} non-empty components"
        )));
    }
    let (base, extra) = (len / k, len % k);
    let mut start = 0;
    Ok((0..k)
        .map(|i| {
            let size = base + usize::from(i < extra);
            let r = start..start + size;
            start += size;
            r
        })
        .collect())
}

fn check_noise(noise_sigma: f64) -> Result<()> {
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise sigma must be finite and nonnegative, got {noise_sigma}"
        )));
    }
    Ok(())
}

impl ForwardModel {
    /// Dense `m x n` matrix with i.i.d. `N(0, 1/m)` entries drawn from `seed`.
    pub fn gaussian_cs(m: usize, n: usize, k: usize, noise_sigma: f64, seed: u64) -> Result<Self> {
        let scale = 1.0 / (m as f64).sqrt();
        let data = standard_normal_vec(&mut rng_from_seed(seed), m * n)
            .into_iter()
            .map(|v| v * scale)
            .collect();
        Self::from_matrix(DenseMatrix::new(m, n, data)?, k, noise_sigma)
    }

    pub fn from_matrix(matrix: DenseMatrix, k: usize, noise_sigma: f64) -> Result<Self> {
        check_noise(noise_sigma)?;
        if matrix.cols == 0 {
            return Err(Error::InvalidParameter("matrix has no columns".into()));
        }
        let bands = partition(matrix.rows, k)?;
        Ok(Self {
            operator: Operator::Dense(matrix),
            bands,
            noise_sigma,
        })
    }

    /// Circular blur of an `height x width` image; component `i` is the
    /// `i`-th row-band of the blurred output.
    pub fn blur(kernel: Kernel2d, height: usize, width: usize, k: usize, noise_sigma: f64) -> Result<Self> {
        check_noise(noise_sigma)?;
        if kernel.height() > height || kernel.width() > width {
            return Err(Error::InvalidParameter(format!(
                "{}x{} kernel does not fit a {height}x{width} image",
                kernel.height(),
                kernel.width()
            )));
        }
        let bands = partition(height, k)?;
        Ok(Self {
            operator: Operator::Blur { kernel, height, width },
            bands,
            noise_sigma,
        })
    }

    pub fn operator(&self) -> &Operator {
        &self.operator
    }

    pub fn kind(&self) -> ModelKind {
        match self.operator {
            Operator::Dense(_) => ModelKind::GaussianCs,
            Operator::Blur { .. } => ModelKind::Blur,
        }
    }

    pub fn k(&self) -> usize {
        self.bands.len()
    }

    pub fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    pub fn input_shape(&self) -> Shape {
        match &self.operator {
            Operator::Dense(a) => Shape::Flat(a.cols),
            Operator::Blur { height, width, .. } => Shape::Grid {
                height: *height,
                width: *width,
            },
        }
    }

    pub fn output_len(&self) -> usize {
        match &self.operator {
            Operator::Dense(a) => a.rows,
            Operator::Blur { height, width, .. } => height * width,
        }
    }

    pub fn model_ref(&self) -> ModelRef {
        ModelRef {
            kind: self.kind(),
            input_shape: self.input_shape(),
            k: self.k(),
        }
    }

    /// Length of measurement block `i`.
    pub fn block_len(&self, i: usize) -> usize {
        let band = &self.bands[i];
        match &self.operator {
            Operator::Dense(_) => band.len(),
            Operator::Blur { width, .. } => band.len() * width,
        }
    }

    fn check_input(&self, x: &Signal) -> Result<()> {
        check_len(self.input_shape().len(), x.len())
    }

    /// `Aᵢ x` for component `i`.
    fn forward_block(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let band = self.bands[i].clone();
        match &self.operator {
            Operator::Dense(a) => band.map(|r| dot(a.row(r), x)).collect(),
            Operator::Blur { kernel, height, width } => kernel.convolve_rows(x, *height, *width, band),
        }
    }

    /// `acc += scale · Aᵢᵀ r` for a residual block `r` of component `i`.
    fn adjoint_block_add(&self, i: usize, r: &[f64], scale: f64, acc: &mut [f64]) {
        let band = self.bands[i].clone();
        match &self.operator {
            Operator::Dense(a) => {
                for (row, &ri) in band.zip(r) {
                    let coeff = scale * ri;
                    for (o, &aij) in acc.iter_mut().zip(a.row(row)) {
                        *o += coeff * aij;
                    }
                }
            }
            Operator::Blur { kernel, height, width } => {
                let back = kernel.adjoint_rows(r, *height, *width, band);
                for (o, b) in acc.iter_mut().zip(back) {
                    *o += scale * b;
                }
            }
        }
    }

    /// Full `A x`, concatenated over blocks.
    pub fn apply(&self, x: &Signal) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok((0..self.k()).flat_map(|i| self.forward_block(i, x.values())).collect())
    }

    /// `Aᵀ r` for a full-length measurement-space vector.
    pub fn adjoint(&self, r: &[f64]) -> Result<Signal> {
        check_len(self.output_len(), r.len())?;
        let mut acc = vec![0.0; self.input_shape().len()];
        let mut offset = 0;
        for i in 0..self.k() {
            let len = self.block_len(i);
            self.adjoint_block_add(i, &r[offset..offset + len], 1.0, &mut acc);
            offset += len;
        }
        Ok(Signal::from_raw(acc, self.input_shape()))
    }

    /// `y = A x_true + w` with `w ~ N(0, noise_sigma²)` i.i.d., split into blocks.
    pub fn simulate_measurements(&self, x_true: &Signal, seed: u64) -> Result<MeasurementSet> {
        if x_true.shape() != self.input_shape() {
            return Err(Error::Shape(format!(
                "model expects {}, got {}",
                self.input_shape(),
                x_true.shape()
            )));
        }
        let mut rng = rng_from_seed(seed);
        let blocks = (0..self.k())
            .map(|i| {
                let clean = self.forward_block(i, x_true.values());
                let noise = standard_normal_vec(&mut rng, clean.len());
                clean
                    .into_iter()
                    .zip(noise)
                    .map(|(c, e)| c + self.noise_sigma * e)
                    .collect()
            })
            .collect();
        MeasurementSet::new(blocks, self.model_ref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    blocks: Vec<Vec<f64>>,
    model: ModelRef,
}

impl MeasurementSet {
    pub fn new(blocks: Vec<Vec<f64>>, model: ModelRef) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("measurement set has no blocks".into()));
        }
        if blocks.len() != model.k {
            return Err(Error::DimensionMismatch {
                expected: model.k,
                actual: blocks.len(),
            });
        }
        for b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidParameter("empty measurement block".into()));
            }
            if let Some(i) = b.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(i));
            }
        }
        Ok(Self { blocks, model })
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.blocks
    }

    pub fn model(&self) -> ModelRef {
        self.model
    }

    pub fn k(&self) -> usize {
        self.blocks.len()
    }

    pub fn concatenated(&self) -> Vec<f64> {
        self.blocks.concat()
    }
}

/// `weight · ‖T x‖₁` for an orthonormal transform `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Regularizer {
    pub weight: f64,
    pub transform: Transform,
}

impl L1Regularizer {
    pub fn value(&self, x: &Signal) -> Result<f64> {
        let coeffs = self.transform.forward(x)?;
        Ok(self.weight * coeffs.values().iter().map(|v| v.abs()).sum::<f64>())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FidelityTerm {
    model: ForwardModel,
    measurements: MeasurementSet,
}

impl FidelityTerm {
    pub fn new(model: ForwardModel, measurements: MeasurementSet) -> Result<Self> {
        if measurements.model() != model.model_ref() {
            return Err(Error::Shape(format!(
                "measurements were produced for {:?}, model is {:?}",
                measurements.model(),
                model.model_ref()
            )));
        }
        for (i, b) in measurements.blocks().iter().enumerate() {
            check_len(model.block_len(i), b.len())?;
        }
        Ok(Self { model, measurements })
    }

    pub fn model(&self) -> &ForwardModel {
        &self.model
    }

    pub fn measurements(&self) -> &MeasurementSet {
        &self.measurements
    }

    pub fn k(&self) -> usize {
        self.model.k()
    }

    pub fn input_shape(&self) -> Shape {
        self.model.input_shape()
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.k() {
            return Err(Error::ComponentIndex { index: i, k: self.k() });
        }
        Ok(())
    }

    fn block_residual(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let mut r = self.model.forward_block(i, x);
        for (ri, yi) in r.iter_mut().zip(&self.measurements.blocks[i]) {
            *ri -= yi;
        }
        r
    }

    /// `Dᵢ(x) = (k/2) ‖yᵢ − Aᵢ x‖²` for a zero-based component index.
    pub fn eval_component(&self, i: usize, x: &Signal) -> Result<f64> {
        self.check_index(i)?;
        self.model.check_input(x)?;
        let r = self.block_residual(i, x.values());
        Ok(0.5 * self.k() as f64 * dot(&r, &r))
    }

    /// `D(x) = ½‖y − Ax‖²`.
    pub fn value(&self, x: &Signal) -> Result<f64> {
        self.model.check_input(x)?;
        Ok((0..self.k())
            .map(|i| {
                let r = self.block_residual(i, x.values());
                0.5 * dot(&r, &r)
            })
            .sum())
    }

    /// `D(x) + R(x)`, or `D(x)` alone when no regularizer is given.
    pub fn objective(&self, x: &Signal, reg: Option<&L1Regularizer>) -> Result<f64> {
        let d = self.value(x)?;
        match reg {
            Some(r) => Ok(d + r.value(x)?),
            None => Ok(d),
        }
    }

    pub fn component_gradient(&self, i: usize, x: &Signal) -> Result<Signal> {
        self.gradient_for_indices(&[i], x)
    }

    /// Mean of `∇Dᵢ` over `indices` (repeats count with multiplicity).
    pub fn gradient_for_indices(&self, indices: &[usize], x: &Signal) -> Result<Signal> {
        self.model.check_input(x)?;
        if indices.is_empty() {
            return Err(Error::InvalidParameter("empty index set".into()));
        }
        for &i in indices {
            self.check_index(i)?;
        }
        let scale = self.k() as f64 / indices.len() as f64;
        let mut acc = vec![0.0; x.len()];
        for &i in indices {
            let r = self.block_residual(i, x.values());
            self.model.adjoint_block_add(i, &r, scale, &mut acc);
        }
        Ok(Signal::from_raw(acc, self.input_shape()))
    }

    /// `∇D(x) = Aᵀ(Ax − y)`.
    pub fn full_gradient(&self, x: &Signal) -> Result<Signal> {
        self.model.check_input(x)?;
        let mut acc = vec![0.0; x.len()];
        for i in 0..self.k() {
            let r = self.block_residual(i, x.values());
            self.model.adjoint_block_add(i, &r, 1.0, &mut acc);
        }
        Ok(Signal::from_raw(acc, self.input_shape()))
    }

    /// Draws a minibatch from `sampler` and returns the averaged component
    /// gradient along with the drawn indices.
    pub fn minibatch_gradient(&self, sampler: &mut Sampler, x: &Signal) -> Result<(Signal, Vec<usize>)> {
        if sampler.k() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                actual: sampler.k(),
            });
        }
        let indices = sampler.draw();
        let g = self.gradient_for_indices(&indices, x)?;
        Ok((g, indices))
    }

    /// Largest eigenvalue of `AᵀA` by power iteration, stopping once the
    /// Rayleigh quotient changes by less than `tol` relative.
    pub fn lipschitz(&self, max_iters: usize, tol: f64) -> Result<f64> {
        let shape = self.input_shape();
        let mut v = standard_normal_vec(&mut rng_from_seed(0x05ee_d1a9), shape.len());
        let mut estimate = 0.0;
        for _ in 0..max_iters.max(1) {
            let nv = norm(&v);
            if nv == 0.0 {
                return Ok(0.0);
            }
            v.iter_mut().for_each(|e| *e /= nv);
            let av = self.model.apply(&Signal::from_raw(v.clone(), shape))?;
            let w = self.model.adjoint(&av)?.into_values();
            let next = dot(&v, &w);
            let done = (next - estimate).abs() <= tol * next.abs();
            estimate = next;
            v = w;
            if done {
                break;
            }
        }
        Ok(estimate)
    }

    /// Largest per-component Lipschitz constant `k ‖Aᵢ‖²` (power iteration
    /// on each `k AᵢᵀAᵢ`).
    pub fn max_component_lipschitz(&self, max_iters: usize) -> Result<f64> {
        let shape = self.input_shape();
        let mut worst: f64 = 0.0;
        for i in 0..self.k() {
            let mut v = standard_normal_vec(&mut rng_from_seed(i as u64), shape.len());
            let mut estimate = 0.0;
            for _ in 0..max_iters.max(1) {
                let nv = norm(&v);
                if nv == 0.0 {
                    break;
                }
                v.iter_mut().for_each(|e| *e /= nv);
                let av = self.model.forward_block(i, &v);
                let mut w = vec![0.0; v.len()];
                self.model.adjoint_block_add(i, &av, self.k() as f64, &mut w);
                estimate = dot(&v, &w);
                v = w;
            }
            worst = worst.max(estimate);
        }
        Ok(worst)
    }

    /// Prepares exact solves of `(AᵀA + ρI) x = Aᵀy + ρz`.
    pub fn regularized_solver(&self, rho: f64) -> Result<NormalSolver> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
        }
        let y = self.measurements.concatenated();
        let aty = self.model.adjoint(&y)?;
        match &self.model.operator {
            Operator::Dense(a) => {
                let mat = DMatrix::from_row_slice(a.rows, a.cols, &a.data);
                let mut gram = mat.transpose() * &mat;
                for d in 0..a.cols {
                    gram[(d, d)] += rho;
                }
                let chol = Cholesky::new(gram).ok_or(Error::Singular)?;
                Ok(NormalSolver {
                    rho,
                    aty,
                    kind: SolverKind::Cholesky(chol),
                })
            }
            Operator::Blur { kernel, height, width } => {
                let denom: Vec<f64> = kernel
                    .spectrum(*height, *width)
                    .into_iter()
                    .map(|z| z.norm_sqr() + rho)
                    .collect();
                Ok(NormalSolver {
                    rho,
                    aty,
                    kind: SolverKind::Spectral {
                        denom,
                        height: *height,
                        width: *width,
                    },
                })
            }
        }
    }
}

#[derive(Debug, Clone)]
enum SolverKind {
    Cholesky(Cholesky<f64, Dyn>),
    Spectral {
        denom: Vec<f64>,
        height: usize,
        width: usize,
    },
}

/// Exact solver for the quadratic `D(x) + (ρ/2)‖x − z‖²`.
#[derive(Debug, Clone)]
pub struct NormalSolver {
    rho: f64,
    aty: Signal,
    kind: SolverKind,
}

impl NormalSolver {
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// `argmin_x ½‖y − Ax‖² + (ρ/2)‖x − z‖²`.
    pub fn solve(&self, z: &Signal) -> Result<Signal> {
        check_len(self.aty.len(), z.len())?;
        let rhs: Vec<f64> = self
            .aty
            .values()
            .iter()
            .zip(z.values())
            .map(|(a, zi)| a + self.rho * zi)
            .collect();
        let x = match &self.kind {
            SolverKind::Cholesky(chol) => chol.solve(&DVector::from_vec(rhs)).data.into(),
            SolverKind::Spectral { denom, height, width } => {
                let mut spec = fft2_real(&rhs, *height, *width);
                for (s, d) in spec.iter_mut().zip(denom) {
                    *s /= Complex64::new(*d, 0.0);
                }
                fft2(&mut spec, *height, *width, true);
                spec.into_iter().map(|c| c.re).collect()
            }
        };
        Ok(self.aty.with_values(x))
    }
}

/// I.i.d. uniform draws of `b` component indices with replacement.
#[derive(Debug, Clone)]
pub struct MinibatchSampler {
    k: usize,
    b: usize,
    rng: Rng,
}

impl MinibatchSampler {
    pub fn new(k: usize, b: usize, seed: u64) -> Result<Self> {
        if k == 0 || b == 0 {
            return Err(Error::InvalidParameter(format!(
                "sampler needs k >= 1 and b >= 1, got k={k}, b={b}"
            )));
        }
        if b > k {
            log::warn!("minibatch size {b} exceeds component count {k}; sampling with replacement");
        }
        Ok(Self {
            k,
            b,
            rng: rng_from_seed(seed),
        })
    }

    pub fn draw(&mut self) -> Vec<usize> {
        (0..self.b).map(|_| self.rng.random_range(0..self.k)).collect()
    }
}

/// Source of minibatch indices.
///
/// `Uniform` is the sampler the solvers use. `Cyclic` and `Scripted` are
/// deterministic stand-ins for tests: with `b = k`, `Cyclic` returns every
/// component exactly once per draw, which degenerates the minibatch
/// gradient into the full gradient.
#[derive(Debug, Clone)]
pub enum Sampler {
    Uniform(MinibatchSampler),
    Cyclic { k: usize, b: usize, next: usize },
    Scripted { k: usize, b: usize, queue: VecDeque<usize> },
}

impl Sampler {
    pub fn uniform(k: usize, b: usize, seed: u64) -> Result<Self> {
        MinibatchSampler::new(k, b, seed).map(Sampler::Uniform)
    }

    pub fn cyclic(k: usize, b: usize) -> Result<Self> {
        if k == 0 || b == 0 {
            return Err(Error::InvalidParameter("cyclic sampler needs k, b >= 1".into()));
        }
        Ok(Sampler::Cyclic { k, b, next: 0 })
    }

    /// Replays `indices` in order, `b` at a time.
    pub fn scripted(k: usize, b: usize, indices: Vec<usize>) -> Result<Self> {
        if b == 0 || indices.iter().any(|&i| i >= k) {
            return Err(Error::InvalidParameter("scripted indices out of range".into()));
        }
        Ok(Sampler::Scripted {
            k,
            b,
            queue: indices.into(),
        })
    }

    pub fn k(&self) -> usize {
        match self {
            Sampler::Uniform(s) => s.k,
            Sampler::Cyclic { k, .. } | Sampler::Scripted { k, .. } => *k,
        }
    }

    pub fn b(&self) -> usize {
        match self {
            Sampler::Uniform(s) => s.b,
            Sampler::Cyclic { b, .. } | Sampler::Scripted { b, .. } => *b,
        }
    }

    /// # Panics
    /// When a scripted sampler runs out of indices.
    pub fn draw(&mut self) -> Vec<usize> {
        match self {
            Sampler::Uniform(s) => s.draw(),
            Sampler::Cyclic { k, b, next } => (0..*b)
                .map(|_| {
                    let i = *next;
                    *next = (*next + 1) % *k;
                    i
                })
                .collect(),
            Sampler::Scripted { b, queue, .. } => (0..*b)
                .map(|_| queue.pop_front().expect("scripted sampler exhausted"))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_term(n: usize, k: usize, y: Vec<f64>) -> FidelityTerm {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        let model = ForwardModel::from_matrix(DenseMatrix::new(n, n, data).unwrap(), k, 0.0).unwrap();
        let m = MeasurementSet::new(
            partition(n, k).unwrap().into_iter().map(|r| y[r].to_vec()).collect(),
            model.model_ref(),
        )
        .unwrap();
        FidelityTerm::new(model, m).unwrap()
    }

    fn flat(v: &[f64]) -> Signal {
        Signal::flat(v.to_vec()).unwrap()
    }

    #[test]
    fn partition_is_balanced() {
        let p = partition(128, 50).unwrap();
        assert_eq!(p.len(), 50);
        assert_eq!(p.iter().map(|r| r.len()).sum::<usize>(), 128);
        assert!(p.iter().all(|r| r.len() == 2 || r.len() == 3));
        assert!(partition(3, 4).is_err());
        assert!(partition(3, 0).is_err());
    }

    #[test]
    fn eval_component_examples() {
        let f = identity_term(2, 1, vec![0.0, 0.0]);
        assert_eq!(f.eval_component(0, &flat(&[1.0, 1.0])).unwrap(), 1.0);
        let x = flat(&[0.3, -0.2]);
        let g = identity_term(2, 1, x.values().to_vec());
        assert_eq!(g.eval_component(0, &x).unwrap(), 0.0);

        let f = identity_term(2, 2, vec![1.0, 2.0]);
        let zero = flat(&[0.0, 0.0]);
        let d1 = f.eval_component(0, &zero).unwrap();
        let d2 = f.eval_component(1, &zero).unwrap();
        assert_eq!((d1, d2), (1.0, 4.0));
        // (1/k) Σ Dᵢ = ½‖y‖²
        assert_eq!(0.5 * (d1 + d2), 2.5);
        assert_eq!(f.value(&zero).unwrap(), 2.5);
        assert!(matches!(
            f.eval_component(2, &zero),
            Err(Error::ComponentIndex { index: 2, k: 2 })
        ));
    }

    #[test]
    fn full_gradient_examples() {
        let f = identity_term(2, 1, vec![0.0, 0.0]);
        assert_eq!(f.full_gradient(&flat(&[2.0, -3.0])).unwrap().values(), &[2.0, -3.0]);
        let f = identity_term(3, 3, vec![1.0, 2.0, 3.0]);
        assert_eq!(f.full_gradient(&flat(&[1.0, 2.0, 3.0])).unwrap().values(), &[0.0; 3]);
        assert!(f.full_gradient(&flat(&[1.0])).is_err());
    }

    #[test]
    fn identity_blur_reproduces_truth() {
        let kernel = Kernel2d::new(1, 1, vec![1.0]).unwrap();
        let model = ForwardModel::blur(kernel, 4, 5, 2, 0.0).unwrap();
        let x = Signal::grid(4, 5, (0..20).map(|i| i as f64 * 0.1).collect()).unwrap();
        let y = model.simulate_measurements(&x, 3).unwrap();
        assert_eq!(y.concatenated(), x.values());
        assert_eq!(y.blocks()[0].len(), 10);
    }

    #[test]
    fn simulate_rejects_wrong_shape() {
        let model = ForwardModel::gaussian_cs(4, 6, 2, 0.0, 1).unwrap();
        assert!(model.simulate_measurements(&Signal::zeros(Shape::Flat(5)), 0).is_err());
    }

    #[test]
    fn blur_kernel_validation() {
        assert!(Kernel2d::new(2, 3, vec![0.0; 6]).is_err());
        assert!(Kernel2d::new(3, 3, vec![f64::NAN; 9]).is_err());
        let g = Kernel2d::gaussian(1.0, 2).unwrap();
        assert!((g.taps().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(ForwardModel::blur(g, 4, 4, 2, 0.0).is_err());
    }

    #[test]
    fn measurement_set_validation() {
        let model = ForwardModel::gaussian_cs(4, 3, 2, 0.0, 1).unwrap();
        let r = model.model_ref();
        assert!(MeasurementSet::new(vec![vec![1.0, 2.0]], r).is_err());
        assert!(MeasurementSet::new(vec![vec![1.0], vec![]], r).is_err());
        assert!(MeasurementSet::new(vec![vec![1.0], vec![f64::INFINITY]], r).is_err());
        // right count, wrong block length
        let m = MeasurementSet::new(vec![vec![1.0], vec![1.0, 2.0, 3.0]], r).unwrap();
        assert!(FidelityTerm::new(model, m).is_err());
    }

    #[test]
    fn samplers() {
        let mut s = Sampler::cyclic(3, 3).unwrap();
        assert_eq!(s.draw(), vec![0, 1, 2]);
        let mut s = Sampler::cyclic(3, 2).unwrap();
        assert_eq!(s.draw(), vec![0, 1]);
        assert_eq!(s.draw(), vec![2, 0]);
        let mut s = Sampler::scripted(4, 2, vec![3, 3, 0, 1]).unwrap();
        assert_eq!(s.draw(), vec![3, 3]);
        assert_eq!(s.draw(), vec![0, 1]);
        assert!(Sampler::scripted(2, 1, vec![2]).is_err());

        let mut a = Sampler::uniform(5, 4, 9).unwrap();
        let mut b = Sampler::uniform(5, 4, 9).unwrap();
        for _ in 0..20 {
            let d = a.draw();
            assert!(d.iter().all(|&i| i < 5));
            assert_eq!(d, b.draw());
        }
        // b > k is allowed
        assert_eq!(Sampler::uniform(2, 5, 0).unwrap().draw().len(), 5);
    }

    #[test]
    fn uniform_sampler_covers_components_evenly() {
        let mut s = MinibatchSampler::new(4, 2, 17).unwrap();
        let mut counts = [0usize; 4];
        for _ in 0..20_000 {
            for i in s.draw() {
                counts[i] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 - 10_000.0).abs() < 400.0, "{counts:?}");
        }
    }

    #[test]
    fn normal_solver_satisfies_equations() {
        let model = ForwardModel::gaussian_cs(6, 5, 3, 0.0, 4).unwrap();
        let truth = Signal::flat(vec![1.0, -0.5, 0.0, 2.0, 0.3]).unwrap();
        let y = model.simulate_measurements(&truth, 0).unwrap();
        let f = FidelityTerm::new(model, y).unwrap();
        let z = Signal::flat(vec![0.1, 0.2, 0.3, 0.4, 0.5]).unwrap();
        let solver = f.regularized_solver(0.7).unwrap();
        let x = solver.solve(&z).unwrap();
        // stationarity: ∇D(x) + ρ(x − z) = 0
        let g = f.full_gradient(&x).unwrap();
        let stat = g.add_scaled(0.7, &x.add_scaled(-1.0, &z).unwrap()).unwrap();
        assert!(stat.norm() < 1e-12, "{}", stat.norm());
        assert!(f.regularized_solver(0.0).is_err());
    }

    #[test]
    fn spectral_solver_satisfies_equations() {
        let kernel = Kernel2d::gaussian(0.8, 1).unwrap();
        let model = ForwardModel::blur(kernel, 6, 8, 3, 0.0).unwrap();
        let truth = Signal::grid(6, 8, (0..48).map(|i| ((i * 5) % 7) as f64).collect()).unwrap();
        let f = FidelityTerm::new(model.clone(), model.simulate_measurements(&truth, 0).unwrap()).unwrap();
        let z = Signal::zeros(truth.shape());
        let x = f.regularized_solver(0.05).unwrap().solve(&z).unwrap();
        let g = f.full_gradient(&x).unwrap();
        let stat = g.add_scaled(0.05, &x).unwrap();
        assert!(stat.norm() < 1e-10, "{}", stat.norm());
    }

    #[test]
    fn lipschitz_of_identity_and_scaled() {
        let f = identity_term(4, 2, vec![0.0; 4]);
        assert!((f.lipschitz(50, 1e-9).unwrap() - 1.0).abs() < 1e-9);
        // Each component is a 2x4 coordinate selector: k‖Aᵢ‖² = 2.
        assert!((f.max_component_lipschitz(50).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn objective_with_l1() {
        let x = flat(&[1.0, -2.0]);
        let f = identity_term(2, 1, x.values().to_vec());
        assert_eq!(f.objective(&x, None).unwrap(), 0.0);
        let reg = L1Regularizer {
            weight: 1.0,
            transform: Transform::Identity,
        };
        assert_eq!(f.objective(&x, Some(&reg)).unwrap(), 3.0);
    }

    #[test]
    fn adjoint_matches_inner_product() {
        let kernel = Kernel2d::new(3, 3, (0..9).map(|i| (i as f64 - 4.0) * 0.3).collect()).unwrap();
        let model = ForwardModel::blur(kernel, 5, 6, 2, 0.0).unwrap();
        let x = Signal::grid(5, 6, (0..30).map(|i| (i as f64).sin()).collect()).unwrap();
        let r: Vec<f64> = (0..30).map(|i| (i as f64 * 0.3).cos()).collect();
        let ax = model.apply(&x).unwrap();
        let atr = model.adjoint(&r).unwrap();
        assert!((dot(&ax, &r) - dot(x.values(), atr.values())).abs() < 1e-12);
    }
}
