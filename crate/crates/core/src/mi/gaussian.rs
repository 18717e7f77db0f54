use super::{Diagnostics, Estimator, MIEstimate, SamplePairs};
use crate::error::{dim_check, Error, Result};
use crate::numeric::{log_det_spd, Matrix};
use crate::projectors::Projector;

fn block(m: &Matrix, r0: usize, c0: usize, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |i, j| m[(r0 + i, c0 + j)])
}

/// `½ log(det Σ_x det Σ_y / det Σ)` for a joint covariance whose first `dx`
/// coordinates are `X` and the rest `Y`.
pub fn mi_gaussian_closed_form(joint: &Matrix, dx: usize) -> Result<MIEstimate> {
    let (r, c) = joint.shape();
    dim_check("joint covariance columns", r, c)?;
    if dx == 0 || dx >= r {
        return Err(Error::InvalidArgument(format!("split {dx} must lie strictly inside 0..{r}")));
    }
    let dy = r - dx;
    let lx = log_det_spd(&block(joint, 0, 0, dx, dx))?;
    let ly = log_det_spd(&block(joint, dx, dx, dy, dy))?;
    let lj = log_det_spd(joint)?;
    Ok(MIEstimate::new(0.5 * (lx + ly - lj), Estimator::ClosedFormGaussian, 0, Diagnostics::default()))
}

/// Plug-in Gaussian MI from the sample covariance of the pairs.
pub fn mi_gaussian_from_samples(pairs: &SamplePairs) -> Result<MIEstimate> {
    let m = pairs.len();
    if m < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let joint = pairs.xs.hstack(&pairs.ys)?;
    let p = joint.cols();
    let mut mu = vec![0.0; p];
    for i in 0..m {
        crate::numeric::axpy(1.0, joint.row(i), &mut mu);
    }
    mu.iter_mut().for_each(|v| *v /= m as f64);
    let centered = Matrix::from_fn(m, p, |i, j| joint[(i, j)] - mu[j]);
    let mut cov = centered.gram();
    cov.scale(1.0 / (m - 1) as f64);
    let mut est = mi_gaussian_closed_form(&cov, pairs.xs.cols())?;
    est.n_samples = m;
    est.near_deterministic = est.value > (m as f64).ln() / 2.0;
    Ok(est)
}

/// Joint covariance of `(ΘᵀZ̄, Z_i)` when `Z_1..Z_n ~ N(0, I_D)` i.i.d.:
/// `[[ΘᵀΘ/n, Θᵀ/n], [Θ/n, I_D]]`.
pub fn gme_slice_covariance(projector: &Projector, n: usize) -> Matrix {
    let theta = projector.to_dense();
    let (big_d, d) = theta.shape();
    let gram = theta.gram();
    let nf = n as f64;
    Matrix::from_fn(d + big_d, d + big_d, |i, j| match (i < d, j < d) {
        (true, true) => gram[(i, j)] / nf,
        (true, false) => theta[(j - d, i)] / nf,
        (false, true) => theta[(i - d, j)] / nf,
        (false, false) => f64::from(i == j),
    })
}

/// `I(ΘᵀZ̄; Z_i) = (d/2)·log(n/(n−1))` for an orthonormal `Θ`.
pub fn gme_sliced_mi(d: usize, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n = {n} must be at least 2")));
    }
    let nf = n as f64;
    Ok(-0.5 * d as f64 * (-1.0 / nf).ln_1p())
}
