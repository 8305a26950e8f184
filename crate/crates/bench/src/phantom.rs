//! Synthetic ground-truth signals.

use std::fmt;
use std::str::FromStr;

use pnp_core::rng::rng_from_seed;
use pnp_core::{Error, Result, Shape, Signal};
use rand::seq::index;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhantomKind {
    SparseSpikes,
    PiecewiseBlocks,
    CheckerImage,
}

impl PhantomKind {
    pub const ALL: [PhantomKind; 3] = [
        PhantomKind::SparseSpikes,
        PhantomKind::PiecewiseBlocks,
        PhantomKind::CheckerImage,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PhantomKind::SparseSpikes => "sparse_spikes",
            PhantomKind::PiecewiseBlocks => "piecewise_blocks",
            PhantomKind::CheckerImage => "checker_image",
        }
    }
}

impl fmt::Display for PhantomKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PhantomKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown phantom `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhantomParams {
    /// Fraction of nonzero entries for `sparse_spikes`, in `(0, 1]`.
    pub sparsity: f64,
    /// Side length of a constant tile (`piecewise_blocks`) or checker cell.
    pub block: usize,
}

impl PhantomParams {
    pub fn default_for(kind: PhantomKind) -> Self {
        let block = match kind {
            PhantomKind::CheckerImage => 2,
            _ => 8,
        };
        Self { sparsity: 0.05, block }
    }
}

/// Number of spikes for `sparsity · n`, rounded up. Products that land
/// within rounding error of an integer are not bumped to the next one.
pub fn spike_count(sparsity: f64, n: usize) -> usize {
    let raw = sparsity * n as f64;
    let nearest = raw.round();
    if (raw - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as usize
    } else {
        raw.ceil() as usize
    }
}

pub fn make_phantom(kind: PhantomKind, shape: Shape, params: PhantomParams, seed: u64) -> Result<Signal> {
    let n = shape.len();
    if n == 0 {
        return Err(Error::Shape("phantom shape is empty".into()));
    }
    if params.block == 0 {
        return Err(Error::InvalidParameter("phantom block size must be positive".into()));
    }
    let mut rng = rng_from_seed(seed);
    match kind {
        PhantomKind::SparseSpikes => {
            if !(params.sparsity > 0.0 && params.sparsity <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "sparsity must lie in (0, 1], got {}",
                    params.sparsity
                )));
            }
            let mut values = vec![0.0; n];
            for i in index::sample(&mut rng, n, spike_count(params.sparsity, n)) {
                values[i] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            }
            Signal::new(values, shape)
        }
        PhantomKind::PiecewiseBlocks => {
            let (h, w) = shape.dims().unwrap_or((1, n));
            let b = params.block;
            let (tiles_r, tiles_c) = (h.div_ceil(b), w.div_ceil(b));
            let levels: Vec<f64> = (0..tiles_r * tiles_c).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let values = (0..h)
                .flat_map(|r| (0..w).map(move |c| (r, c)))
                .map(|(r, c)| levels[(r / b) * tiles_c + c / b])
                .collect();
            Signal::new(values, shape)
        }
        PhantomKind::CheckerImage => {
            let (h, w) = shape
                .dims()
                .ok_or_else(|| Error::Shape("checker_image needs a 2D shape".into()))?;
            let b = params.block;
            let values = (0..h)
                .flat_map(|r| (0..w).map(move |c| if (r / b + c / b).is_multiple_of(2) { 0.25 } else { 0.75 }))
                .collect();
            Signal::grid(h, w, values)
        }
    }
}
