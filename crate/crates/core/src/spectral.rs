//! Circular convolution, 2D FFT, and the orthonormal DCT-II.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// In-place 2D DFT of a row-major `height x width` array.
pub fn fft2(data: &mut [Complex64], height: usize, width: usize, inverse: bool) {
    debug_assert_eq!(data.len(), height * width);
    let mut planner = FftPlanner::new();
    let (row_fft, col_fft) = if inverse {
        (planner.plan_fft_inverse(width), planner.plan_fft_inverse(height))
    } else {
        (planner.plan_fft_forward(width), planner.plan_fft_forward(height))
    };
    for row in data.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let mut column = vec![Complex64::default(); height];
    for c in 0..width {
        for r in 0..height {
            column[r] = data[r * width + c];
        }
        col_fft.process(&mut column);
        for r in 0..height {
            data[r * width + c] = column[r];
        }
    }
    if inverse {
        let scale = 1.0 / (height * width) as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }
}

/// Forward DFT of a real image.
pub fn fft2_real(values: &[f64], height: usize, width: usize) -> Vec<Complex64> {
    let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut data, height, width, false);
    data
}

/// Small odd-sized kernel applied with circular boundaries.
///
/// The center tap sits at `(kh / 2, kw / 2)`; applying the kernel computes
/// the true convolution `(K * x)[r, c] = Σ K[a, b] x[r - a + ca, c - b + cb]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2d {
    pub(crate) kh: usize,
    pub(crate) kw: usize,
    pub(crate) taps: Vec<f64>,
}

impl Kernel2d {
    pub fn new(kh: usize, kw: usize, taps: Vec<f64>) -> Result<Self> {
        if kh.is_multiple_of(2) || kw.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "kernel dimensions must be odd, got {kh}x{kw}"
            )));
        }
        if taps.len() != kh * kw {
            return Err(Error::DimensionMismatch {
                expected: kh * kw,
                actual: taps.len(),
            });
        }
        if let Some(i) = taps.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { kh, kw, taps })
    }

    /// Normalized isotropic Gaussian of standard deviation `std` on a
    /// `(2 radius + 1)²` support.
    pub fn gaussian(std: f64, radius: usize) -> Result<Self> {
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::InvalidParameter(format!("blur std must be positive, got {std}")));
        }
        let size = 2 * radius + 1;
        let mut taps: Vec<f64> = (0..size * size)
            .map(|i| {
                let (a, b) = ((i / size) as f64 - radius as f64, (i % size) as f64 - radius as f64);
                (-(a * a + b * b) / (2.0 * std * std)).exp()
            })
            .collect();
        let total: f64 = taps.iter().sum();
        taps.iter_mut().for_each(|v| *v /= total);
        Self::new(size, size, taps)
    }

    pub fn height(&self) -> usize {
        self.kh
    }

    pub fn width(&self) -> usize {
        self.kw
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Offsets `(dr, dc, weight)` of nonzero taps relative to the center.
    fn offsets(&self) -> impl Iterator<Item = (isize, isize, f64)> + '_ {
        let (ch, cw) = ((self.kh / 2) as isize, (self.kw / 2) as isize);
        self.taps
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(move |(i, &w)| {
                let (a, b) = ((i / self.kw) as isize, (i % self.kw) as isize);
                (a - ch, b - cw, w)
            })
    }

    /// Rows `rows` of `K * x` for an `h x w` image, row-major.
    pub fn convolve_rows(&self, x: &[f64], h: usize, w: usize, rows: std::ops::Range<usize>) -> Vec<f64> {
        let mut out = vec![0.0; rows.len() * w];
        for (dr, dc, weight) in self.offsets() {
            for (or, r) in rows.clone().enumerate() {
                let src_r = wrap(r as isize - dr, h);
                let src = &x[src_r * w..(src_r + 1) * w];
                let dst = &mut out[or * w..(or + 1) * w];
                for (c, d) in dst.iter_mut().enumerate() {
                    *d += weight * src[wrap(c as isize - dc, w)];
                }
            }
        }
        out
    }

    /// `Kᵀ z` where `z` is zero outside rows `rows`; `band` holds those rows.
    pub fn adjoint_rows(&self, band: &[f64], h: usize, w: usize, rows: std::ops::Range<usize>) -> Vec<f64> {
        let mut out = vec![0.0; h * w];
        for (dr, dc, weight) in self.offsets() {
            for (br, r) in rows.clone().enumerate() {
                let dst_r = wrap(r as isize - dr, h);
                let src = &band[br * w..(br + 1) * w];
                let dst = &mut out[dst_r * w..(dst_r + 1) * w];
                for (c, &z) in src.iter().enumerate() {
                    dst[wrap(c as isize - dc, w)] += weight * z;
                }
            }
        }
        out
    }

    /// Kernel embedded in an `h x w` circular grid with its center at the origin.
    pub fn embed(&self, h: usize, w: usize) -> Vec<f64> {
        let mut img = vec![0.0; h * w];
        for (dr, dc, weight) in self.offsets() {
            img[wrap(dr, h) * w + wrap(dc, w)] += weight;
        }
        img
    }

    /// DFT eigenvalues of the circular convolution operator on an `h x w` grid.
    pub fn spectrum(&self, h: usize, w: usize) -> Vec<Complex64> {
        fft2_real(&self.embed(h, w), h, w)
    }
}

pub(crate) fn wrap(i: isize, n: usize) -> usize {
    i.rem_euclid(n as isize) as usize
}

/// 1D circular convolution with a full-period symmetric kernel
/// (`kernel[j]` is the weight at circular offset `j`).
pub(crate) fn circular_smooth_1d(signal: &[f64], kernel: &[f64], out: &mut [f64]) {
    let n = signal.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = kernel
            .iter()
            .enumerate()
            .map(|(j, &kj)| kj * signal[(i + n - j) % n])
            .sum();
    }
}

/// Orthonormal DCT-II basis: row `k` holds the `k`-th basis vector.
pub fn dct_matrix(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    let nf = n as f64;
    for k in 0..n {
        let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
        for i in 0..n {
            m[k * n + i] = scale * (std::f64::consts::PI * (i as f64 + 0.5) * k as f64 / nf).cos();
        }
    }
    m
}

/// Applies `rows_mat` (h x h) on the left and `cols_mat` (w x w) on the right
/// transposed: `R X Cᵀ`, or `Rᵀ X C` when `transpose` is set.
pub(crate) fn separable_transform(
    x: &[f64],
    h: usize,
    w: usize,
    rows_mat: &[f64],
    cols_mat: &[f64],
    transpose: bool,
) -> Vec<f64> {
    let at = |m: &[f64], n: usize, i: usize, j: usize| {
        if transpose {
            m[j * n + i]
        } else {
            m[i * n + j]
        }
    };
    // along each row
    let mut tmp = vec![0.0; h * w];
    for r in 0..h {
        let row = &x[r * w..(r + 1) * w];
        for k in 0..w {
            tmp[r * w + k] = (0..w).map(|i| at(cols_mat, w, k, i) * row[i]).sum();
        }
    }
    // along each column
    let mut out = vec![0.0; h * w];
    for c in 0..w {
        for k in 0..h {
            out[k * w + c] = (0..h).map(|i| at(rows_mat, h, k, i) * tmp[i * w + c]).sum();
        }
    }
    out
}
