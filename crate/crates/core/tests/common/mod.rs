#![allow(dead_code)]

use pnp_core::fidelity::{DenseMatrix, Operator};
use pnp_core::oracles::lasso_coordinate_descent;
use pnp_core::rng::{rng_from_seed, standard_normal_vec};
use pnp_core::{FidelityTerm, ForwardModel, Signal};

pub const LASSO_LAMBDA: f64 = 0.1;

/// `count` entries of ±1 at distinct positions picked by a simple LCG.
pub fn spikes(n: usize, count: usize, seed: u64) -> Signal {
    let mut v = vec![0.0; n];
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut placed = 0;
    while placed < count {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let i = ((state >> 33) % n as u64) as usize;
        if v[i] == 0.0 {
            v[i] = if (state >> 20) & 1 == 0 { 1.0 } else { -1.0 };
            placed += 1;
        }
    }
    Signal::flat(v).unwrap()
}

pub fn gaussian_problem(n: usize, m: usize, k: usize, noise: f64, seed: u64) -> (FidelityTerm, Signal) {
    let truth = spikes(n, (0.05 * n as f64).ceil() as usize, seed);
    let model = ForwardModel::gaussian_cs(m, n, k, noise, seed.wrapping_add(100)).unwrap();
    let y = model.simulate_measurements(&truth, seed.wrapping_add(200)).unwrap();
    (FidelityTerm::new(model, y).unwrap(), truth)
}

/// GaussianCS LASSO instance: n = 64, m = 32, k = 8.
pub fn lasso_instance() -> (FidelityTerm, Signal) {
    gaussian_problem(64, 32, 8, 0.01, 1)
}

pub fn dense(f: &FidelityTerm) -> &DenseMatrix {
    match f.model().operator() {
        Operator::Dense(a) => a,
        _ => panic!("expected a dense model"),
    }
}

/// Coordinate-descent solution of the LASSO for `f` at weight `lambda`.
pub fn lasso_oracle(f: &FidelityTerm, lambda: f64) -> Signal {
    let a = dense(f);
    let y = f.measurements().concatenated();
    Signal::flat(lasso_coordinate_descent(
        a.data(),
        a.rows(),
        a.cols(),
        &y,
        lambda,
        1e-15,
        200_000,
    ))
    .unwrap()
}

pub fn random_signal(n: usize, seed: u64) -> Signal {
    Signal::flat(standard_normal_vec(&mut rng_from_seed(seed), n)).unwrap()
}

pub fn random_matrix_term(m: usize, n: usize, k: usize, seed: u64) -> FidelityTerm {
    let data = standard_normal_vec(&mut rng_from_seed(seed), m * n);
    let model = ForwardModel::from_matrix(DenseMatrix::new(m, n, data).unwrap(), k, 0.0).unwrap();
    let y = model.simulate_measurements(&random_signal(n, seed ^ 0xabc), 0).unwrap();
    FidelityTerm::new(model, y).unwrap()
}
