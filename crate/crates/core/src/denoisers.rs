//! Denoising operators of controllable strength σ.
//!
//! Three variants ship:
//!
//! * `Identity`, for sanity checks.
//! * `SoftThreshold`: soft-thresholding at level σ in an orthonormal
//!   transform (identity or 2D DCT-II). This is the proximal operator of
//!   `σ‖T·‖₁`, so plugging it into the solvers recovers classical ISTA/FISTA.
//! * `GaussianSmooth`: circular convolution with a normalized Gaussian of
//!   standard deviation σ pixels. Linear, with DFT spectrum in `[0, 1]`.
//!
//! All three are nonexpansive; [`nonexpansiveness_probe`] checks it.

use rand::Rng as _;
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, standard_normal_vec};
use crate::signal::{l2_distance, Shape, Signal};
use crate::spectral::{circular_smooth_1d, dct_matrix, fft2_real, separable_transform};

/// Orthonormal analysis transform used by the soft-threshold denoiser.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    Identity,
    /// Separable 2D DCT-II with orthonormal scaling. Needs a grid signal.
    Dct2,
}

impl Transform {
    pub fn forward(&self, x: &Signal) -> Result<Signal> {
        self.apply(x, false)
    }

    pub fn inverse(&self, x: &Signal) -> Result<Signal> {
        self.apply(x, true)
    }

    fn apply(&self, x: &Signal, inverse: bool) -> Result<Signal> {
        match self {
            Transform::Identity => Ok(x.clone()),
            Transform::Dct2 => {
                let (h, w) = grid_dims(x, "DCT")?;
                let (rows, cols) = (dct_matrix(h), dct_matrix(w));
                Ok(x.with_values(separable_transform(x.values(), h, w, &rows, &cols, inverse)))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DenoiserKind {
    Identity,
    SoftThreshold(Transform),
    GaussianSmooth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Denoiser {
    kind: DenoiserKind,
    strength: f64,
}

impl Denoiser {
    pub fn new(kind: DenoiserKind, strength: f64) -> Result<Self> {
        if !(strength >= 0.0 && strength.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "denoiser strength must be finite and nonnegative, got {strength}"
            )));
        }
        Ok(Self { kind, strength })
    }

    pub fn identity() -> Self {
        Self {
            kind: DenoiserKind::Identity,
            strength: 0.0,
        }
    }

    pub fn soft_threshold(transform: Transform, sigma: f64) -> Result<Self> {
        Self::new(DenoiserKind::SoftThreshold(transform), sigma)
    }

    pub fn gaussian_smooth(sigma: f64) -> Result<Self> {
        Self::new(DenoiserKind::GaussianSmooth, sigma)
    }

    pub fn kind(&self) -> DenoiserKind {
        self.kind
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    /// Name and value of the variant's internal parameter derived from σ.
    pub fn internal_parameter(&self) -> (&'static str, f64) {
        match self.kind {
            DenoiserKind::Identity => ("none", 0.0),
            DenoiserKind::SoftThreshold(_) => ("threshold", self.strength),
            DenoiserKind::GaussianSmooth => ("kernel_std_px", self.strength),
        }
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self.kind, DenoiserKind::SoftThreshold(_))
    }

    pub fn apply(&self, x: &Signal) -> Result<Signal> {
        match self.kind {
            DenoiserKind::Identity => Ok(x.clone()),
            DenoiserKind::SoftThreshold(t) => {
                let coeffs = t.forward(x)?;
                t.inverse(&prox_l1(&coeffs, self.strength))
            }
            DenoiserKind::GaussianSmooth => {
                let (h, w) = grid_dims(x, "Gaussian smoothing")?;
                let (kr, kc) = (
                    gaussian_kernel_1d(h, self.strength),
                    gaussian_kernel_1d(w, self.strength),
                );
                let mut tmp = vec![0.0; h * w];
                for (src, dst) in x.values().chunks_exact(w).zip(tmp.chunks_exact_mut(w)) {
                    circular_smooth_1d(src, &kc, dst);
                }
                let mut out = vec![0.0; h * w];
                let mut col = vec![0.0; h];
                let mut smoothed = vec![0.0; h];
                for c in 0..w {
                    for r in 0..h {
                        col[r] = tmp[r * w + c];
                    }
                    circular_smooth_1d(&col, &kr, &mut smoothed);
                    for r in 0..h {
                        out[r * w + c] = smoothed[r];
                    }
                }
                Ok(x.with_values(out))
            }
        }
    }

    /// DFT eigenvalues of a linear denoiser on `shape` (row-major frequency
    /// grid); `None` for nonlinear variants.
    pub fn spectrum(&self, shape: Shape) -> Result<Option<Vec<Complex64>>> {
        match self.kind {
            DenoiserKind::Identity => Ok(Some(vec![Complex64::new(1.0, 0.0); shape.len()])),
            DenoiserKind::SoftThreshold(_) => Ok(None),
            DenoiserKind::GaussianSmooth => {
                let (h, w) = shape
                    .dims()
                    .ok_or_else(|| Error::Shape("Gaussian smoothing needs a 2D signal".into()))?;
                let (kr, kc) = (
                    gaussian_kernel_1d(h, self.strength),
                    gaussian_kernel_1d(w, self.strength),
                );
                let kernel: Vec<f64> = kr.iter().flat_map(|a| kc.iter().map(move |b| a * b)).collect();
                Ok(Some(fft2_real(&kernel, h, w)))
            }
        }
    }
}

fn grid_dims(x: &Signal, what: &str) -> Result<(usize, usize)> {
    x.shape()
        .dims()
        .ok_or_else(|| Error::Shape(format!("{what} needs a 2D signal, got {}", x.shape())))
}

/// Periodized, normalized Gaussian on a circle of `n` samples.
/// `kernel[j]` is the weight at circular offset `j`.
pub(crate) fn gaussian_kernel_1d(n: usize, std: f64) -> Vec<f64> {
    let mut k = vec![0.0; n];
    if std == 0.0 {
        k[0] = 1.0;
        return k;
    }
    let wraps = (8.0 * std / n as f64).ceil() as i64 + 1;
    let nf = n as f64;
    for (j, kj) in k.iter_mut().enumerate() {
        *kj = (-wraps..=wraps)
            .map(|p| {
                let d = j as f64 + p as f64 * nf;
                (-d * d / (2.0 * std * std)).exp()
            })
            .sum();
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Elementwise soft-thresholding `sign(y)·max(|y| − τ, 0)`, the proximal
/// operator of `τ‖·‖₁`.
pub fn prox_l1(y: &Signal, tau: f64) -> Signal {
    y.with_values(y.values().iter().map(|&v| soft(v, tau)).collect())
}

#[inline]
pub(crate) fn soft(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// Largest observed `‖d(x) − d(z)‖ / ‖x − z‖` over `trials` random pairs on
/// `shape`. Pairs mix scales so that thresholds are sometimes active and
/// sometimes not.
pub fn nonexpansiveness_probe(d: &Denoiser, shape: Shape, trials: usize, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    let n = shape.len();
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let scale = 10f64.powf(rng.random_range(-2.0..1.0)) * d.strength.max(1.0);
        let gap = 10f64.powf(rng.random_range(-3.0..0.5)) * scale;
        let x: Vec<f64> = standard_normal_vec(&mut rng, n)
            .into_iter()
            .map(|v| v * scale)
            .collect();
        let z: Vec<f64> = standard_normal_vec(&mut rng, n)
            .into_iter()
            .zip(&x)
            .map(|(e, xi)| xi + gap * e)
            .collect();
        let (x, z) = (Signal::new(x, shape)?, Signal::new(z, shape)?);
        let denom = l2_distance(&x, &z)?;
        if denom == 0.0 {
            continue;
        }
        let num = l2_distance(&d.apply(&x)?, &d.apply(&z)?)?;
        worst = worst.max(num / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn flat(v: &[f64]) -> Signal {
        Signal::flat(v.to_vec()).unwrap()
    }

    fn random_grid(h: usize, w: usize, seed: u64) -> Signal {
        Signal::grid(h, w, standard_normal_vec(&mut rng_from_seed(seed), h * w)).unwrap()
    }

    #[test]
    fn prox_l1_closed_form() {
        assert_eq!(prox_l1(&flat(&[0.0, 0.0]), 1.0).values(), &[0.0, 0.0]);
        assert_eq!(prox_l1(&flat(&[3.0, -2.0, 0.5]), 1.0).values(), &[2.0, -1.0, 0.0]);
    }

    #[test]
    fn prox_l1_matches_grid_search() {
        // brute-force minimizer of ½(x − 1.7)² + 0.3|x| on a 1e-4 grid
        let objective = |x: f64| 0.5 * (x - 1.7) * (x - 1.7) + 0.3 * x.abs();
        let best = (-30_000..=30_000)
            .map(|i| i as f64 * 1e-4)
            .min_by(|a, b| objective(*a).total_cmp(&objective(*b)))
            .unwrap();
        assert!((best - 1.4).abs() < 1e-9);
        let out = prox_l1(&flat(&[1.7]), 0.3).values()[0];
        assert!((out - best).abs() < 1e-4, "{out} vs {best}");
    }

    #[test]
    fn apply_examples() {
        let x = flat(&[3.0, -2.0]);
        assert_eq!(Denoiser::identity().apply(&x).unwrap(), x);
        let st = Denoiser::soft_threshold(Transform::Identity, 1.0).unwrap();
        assert_eq!(st.apply(&x).unwrap().values(), &[2.0, -1.0]);
    }

    #[test]
    fn tiny_gaussian_is_identity() {
        let x = random_grid(8, 8, 3);
        let y = Denoiser::gaussian_smooth(1e-6).unwrap().apply(&x).unwrap();
        assert!(l2_distance(&x, &y).unwrap() < 1e-8);
    }

    #[test]
    fn gaussian_kernel_is_normalized_and_nonnegative() {
        for (n, s) in [(8, 0.5), (16, 2.0), (5, 30.0), (16, 0.0)] {
            let k = gaussian_kernel_1d(n, s);
            assert!(k.iter().all(|&v| v >= 0.0));
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_smoothing_matches_spectrum() {
        let (h, w) = (6, 10);
        let d = Denoiser::gaussian_smooth(1.3).unwrap();
        let x = random_grid(h, w, 9);
        let y = d.apply(&x).unwrap();
        let spec = d.spectrum(x.shape()).unwrap().unwrap();
        let (xf, yf) = (fft2_real(x.values(), h, w), fft2_real(y.values(), h, w));
        for i in 0..h * w {
            assert!((yf[i] - spec[i] * xf[i]).norm() < 1e-10);
        }
    }

    #[test]
    fn shape_errors() {
        let x = flat(&[1.0, 2.0, 3.0, 4.0]);
        assert!(Denoiser::gaussian_smooth(1.0).unwrap().apply(&x).is_err());
        assert!(Denoiser::soft_threshold(Transform::Dct2, 1.0)
            .unwrap()
            .apply(&x)
            .is_err());
        assert!(Denoiser::gaussian_smooth(-1.0).is_err());
    }

    #[test]
    fn dct_preserves_norm_and_inverts() {
        let x = random_grid(5, 7, 11);
        let c = Transform::Dct2.forward(&x).unwrap();
        assert!((c.norm() - x.norm()).abs() < 1e-10);
        let back = Transform::Dct2.inverse(&c).unwrap();
        assert!(l2_distance(&x, &back).unwrap() < 1e-12);
    }

    #[test]
    fn dct_soft_threshold_zero_strength_is_identity() {
        let x = random_grid(4, 6, 2);
        let y = Denoiser::soft_threshold(Transform::Dct2, 0.0)
            .unwrap()
            .apply(&x)
            .unwrap();
        assert!(l2_distance(&x, &y).unwrap() < 1e-12);
    }

    #[test]
    fn probe_identity_is_exactly_one() {
        let r = nonexpansiveness_probe(&Denoiser::identity(), Shape::Flat(16), 50, 1).unwrap();
        assert_eq!(r, 1.0);
        assert!(nonexpansiveness_probe(&Denoiser::identity(), Shape::Flat(4), 0, 1).is_err());
    }

    #[test]
    fn probe_soft_threshold_and_gaussian() {
        let grid = Shape::Grid { height: 16, width: 16 };
        for d in [
            Denoiser::soft_threshold(Transform::Identity, 0.7).unwrap(),
            Denoiser::soft_threshold(Transform::Dct2, 0.3).unwrap(),
            Denoiser::gaussian_smooth(1.5).unwrap(),
        ] {
            let r = nonexpansiveness_probe(&d, grid, 200, 5).unwrap();
            assert!(r <= 1.0 + 1e-10, "{d:?}: {r}");
        }
    }

    proptest! {
        #[test]
        fn prox_beats_perturbations(
            y in prop::collection::vec(-5.0f64..5.0, 1..12),
            tau in 0.0f64..3.0,
            seed in any::<u64>(),
        ) {
            let ys = flat(&y);
            let p = prox_l1(&ys, tau);
            let obj = |x: &[f64]| {
                0.5 * x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
                    + tau * x.iter().map(|v| v.abs()).sum::<f64>()
            };
            let best = obj(p.values());
            let mut rng = rng_from_seed(seed);
            for _ in 0..1000 {
                let scale = 10f64.powf(rng.random_range(-4.0..0.0));
                let pert: Vec<f64> = standard_normal_vec(&mut rng, y.len())
                    .iter().zip(p.values()).map(|(e, v)| v + scale * e).collect();
                prop_assert!(obj(&pert) >= best - 1e-12);
            }
        }

        #[test]
        fn soft_threshold_is_odd(
            v in prop::collection::vec(-5.0f64..5.0, 16),
            sigma in 0.0f64..2.0,
        ) {
            let x = Signal::grid(4, 4, v).unwrap();
            for t in [Transform::Identity, Transform::Dct2] {
                let d = Denoiser::soft_threshold(t, sigma).unwrap();
                let a = d.apply(&x.scale(-1.0)).unwrap();
                let b = d.apply(&x).unwrap().scale(-1.0);
                prop_assert!(l2_distance(&a, &b).unwrap() < 1e-12);
            }
        }
    }
}
