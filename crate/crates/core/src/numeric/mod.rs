//! Deterministic numeric kernels shared by every other module.

mod linalg;
mod matrix;
mod minimize;
mod rng;
mod special;
mod stats;

pub use linalg::{
    cholesky, cholesky_solve, log_det_spd, orthonormalize, solve_spd, spectral_norm, spectral_top,
    spectral_top_gram, SpectralPair,
};
pub use matrix::{axpy, dot, gemm, norm, norm_sq, Matrix};
pub use minimize::{minimize_scalar, Minimum};
pub use rng::{purpose, RngStream};
pub use stats::{mean, percentile_sorted, stderr, variance, Summary};
pub use special::{
    digamma_int, discrete_entropy_bits, discrete_entropy_nats, log_sum_exp, softmax_into,
};

/// Matrix of i.i.d. standard normal entries drawn from `rng`.
pub fn gaussian_matrix(rng: &RngStream, rows: usize, cols: usize) -> Matrix {
    use rand_distr::{Distribution, StandardNormal};
    let mut r = rng.rng();
    let data = (0..rows * cols).map(|_| StandardNormal.sample(&mut r)).collect();
    Matrix::from_vec(rows, cols, data).expect("shape matches by construction")
}
