use crate::error::Result;
use crate::numeric::{gaussian_matrix, orthonormalize, Matrix, RngStream};

/// Haar-distributed orthonormal `D × d` matrix: QR of a Gaussian matrix.
pub(super) fn sample(rng: &RngStream, ambient: usize, dim: usize) -> Result<Matrix> {
    orthonormalize(&gaussian_matrix(rng, ambient, dim))
}
