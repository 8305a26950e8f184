//! Independent reference computations for tests.
//!
//! Nothing here calls into the solver or gradient code; the routines work
//! on raw dense arrays so they can check those paths from the outside.

/// Cyclic coordinate descent for `min ½‖y − Ax‖² + λ‖x‖₁` with a row-major
/// `m x n` matrix. Stops when a full sweep moves no coordinate by more than
/// `tol`.
pub fn lasso_coordinate_descent(
    a: &[f64],
    m: usize,
    n: usize,
    y: &[f64],
    lambda: f64,
    tol: f64,
    max_sweeps: usize,
) -> Vec<f64> {
    assert_eq!(a.len(), m * n);
    assert_eq!(y.len(), m);
    let col_sq: Vec<f64> = (0..n).map(|j| (0..m).map(|i| a[i * n + j].powi(2)).sum()).collect();
    let mut x = vec![0.0; n];
    let mut r = y.to_vec(); // y − Ax
    for _ in 0..max_sweeps {
        let mut max_move: f64 = 0.0;
        for j in 0..n {
            if col_sq[j] == 0.0 {
                continue;
            }
            let rho: f64 = (0..m).map(|i| a[i * n + j] * r[i]).sum::<f64>() + col_sq[j] * x[j];
            let next = if rho > lambda {
                (rho - lambda) / col_sq[j]
            } else if rho < -lambda {
                (rho + lambda) / col_sq[j]
            } else {
                0.0
            };
            let delta = next - x[j];
            if delta != 0.0 {
                for i in 0..m {
                    r[i] -= a[i * n + j] * delta;
                }
                x[j] = next;
            }
            max_move = max_move.max(delta.abs());
        }
        if max_move <= tol {
            break;
        }
    }
    x
}

/// `½‖y − Ax‖² + λ‖x‖₁` evaluated directly.
pub fn lasso_objective(a: &[f64], m: usize, n: usize, y: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let fit: f64 = (0..m)
        .map(|i| {
            let ax: f64 = (0..n).map(|j| a[i * n + j] * x[j]).sum();
            (y[i] - ax).powi(2)
        })
        .sum();
    0.5 * fit + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// Central finite-difference gradient of `f` at `x` with step `h`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Dense `n x n` matrix of circular convolution by a `kh x kw` kernel
/// (center tap at `(kh/2, kw/2)`) on an `h x w` image, row-major.
pub fn dense_circular_convolution(taps: &[f64], kh: usize, kw: usize, h: usize, w: usize) -> Vec<f64> {
    let n = h * w;
    let mut mat = vec![0.0; n * n];
    for r in 0..h {
        for c in 0..w {
            let out = r * w + c;
            for a in 0..kh {
                for b in 0..kw {
                    let sr = (r + h * kh + kh / 2 - a) % h;
                    let sc = (c + w * kw + kw / 2 - b) % w;
                    mat[out * n + sr * w + sc] += taps[a * kw + b];
                }
            }
        }
    }
    mat
}
