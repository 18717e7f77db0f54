use super::matrix::{dot, norm, norm_sq, Matrix};
use crate::error::{Error, Result};

/// Orthonormal basis of the column span of `m` via Householder QR.
///
/// Column signs are fixed so that the implied `R` has a nonnegative diagonal,
/// which makes the output a deterministic function of the input.
pub fn orthonormalize(m: &Matrix) -> Result<Matrix> {
    let (rows, cols) = m.shape();
    if rows < cols {
        return Err(Error::InvalidArgument(format!(
            "orthonormalize needs rows >= cols, got {rows}x{cols}"
        )));
    }
    let scale = (0..cols).map(|j| norm(&m.col(j))).fold(0.0, f64::max);
    let tol = (rows.max(cols) as f64) * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
    let mut a = m.clone();
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(cols);
    let mut rdiag = vec![0.0; cols];
    for k in 0..cols {
        let mut v: Vec<f64> = (k..rows).map(|i| a[(i, k)]).collect();
        let xnorm = norm(&v);
        if xnorm <= tol {
            return Err(Error::RankDeficient { column: k, norm: xnorm });
        }
        let alpha = if v[0] >= 0.0 { -xnorm } else { xnorm };
        rdiag[k] = alpha;
        v[0] -= alpha;
        let vn = norm(&v);
        v.iter_mut().for_each(|x| *x /= vn);
        for j in k..cols {
            let s: f64 = (k..rows).map(|i| v[i - k] * a[(i, j)]).sum();
            for i in k..rows {
                a[(i, j)] -= 2.0 * s * v[i - k];
            }
        }
        reflectors.push(v);
    }
    let mut q = Matrix::zeros(rows, cols);
    for j in 0..cols {
        q[(j, j)] = 1.0;
    }
    for (k, v) in reflectors.iter().enumerate().rev() {
        for j in 0..cols {
            let s: f64 = (k..rows).map(|i| v[i - k] * q[(i, j)]).sum();
            if s != 0.0 {
                for i in k..rows {
                    q[(i, j)] -= 2.0 * s * v[i - k];
                }
            }
        }
    }
    for (j, r) in rdiag.iter().enumerate() {
        if *r < 0.0 {
            for i in 0..rows {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok(q)
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::Dimension("cholesky needs a square matrix".into()));
    }
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let s = a[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let ljj = s.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solve `L Lᵀ x = b` given the Cholesky factor `L`.
pub fn cholesky_solve(l: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = l.rows();
    crate::error::dim_check("cholesky_solve", n, b.len())?;
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - dot(&l.row(i)[..i], &y[..i])) / l[(i, i)];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[(k, i)] * x[k]).sum();
        x[i] = (y[i] - s) / l[(i, i)];
    }
    Ok(x)
}

pub fn solve_spd(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    cholesky_solve(&cholesky(a)?, b)
}

pub fn log_det_spd(a: &Matrix) -> Result<f64> {
    let l = cholesky(a)?;
    Ok(2.0 * (0..l.rows()).map(|i| l[(i, i)].ln()).sum::<f64>())
}

/// Leading singular triple from power iteration on `MᵀM`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPair {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub iters: usize,
    pub converged: bool,
}

/// Power iteration with optional warm start. Stops when the singular-pair
/// residual `‖Mᵀu − σv‖` drops below `tol · σ`.
pub fn spectral_top(m: &Matrix, warm: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<SpectralPair> {
    let cols = m.cols();
    let mut v: Vec<f64> = match warm {
        Some(w) if w.len() == cols && norm(w) > 0.0 => w.to_vec(),
        _ => (0..cols).map(|j| 1.0 + 0.5 * ((j as f64) * 0.7548776662).sin()).collect(),
    };
    let vn = norm(&v);
    v.iter_mut().for_each(|x| *x /= vn);
    let mut sigma = 0.0;
    let mut u = vec![0.0; m.rows()];
    for it in 1..=max_iter.max(1) {
        let w = m.matvec(&v)?;
        sigma = norm(&w);
        if sigma == 0.0 {
            if it == 1 && m.max_abs() == 0.0 {
                return Err(Error::InvalidArgument("spectral norm of a zero matrix".into()));
            }
            // Start vector was in the null space; restart from a basis vector.
            v = vec![0.0; cols];
            v[it % cols] = 1.0;
            continue;
        }
        u = w.iter().map(|x| x / sigma).collect();
        let z = m.matvec_t(&u)?;
        let resid = z.iter().zip(&v).map(|(a, b)| (a - sigma * b).powi(2)).sum::<f64>().sqrt();
        let zn = norm(&z);
        v = z.iter().map(|x| x / zn).collect();
        if resid <= tol * sigma {
            // One more half-step so `sigma` matches the returned `v`.
            let w = m.matvec(&v)?;
            let s2 = norm(&w);
            if s2 > 0.0 {
                sigma = s2;
                u = w.iter().map(|x| x / s2).collect();
            }
            return Ok(SpectralPair { sigma, u, v, iters: it, converged: true });
        }
    }
    Ok(SpectralPair { sigma, u, v, iters: max_iter, converged: false })
}

/// Leading singular triple from repeated squaring of the smaller Gram
/// matrix. The cost is fixed by the shape, so unlike power iteration it does
/// not slow down when the top two singular values are close.
pub fn spectral_top_gram(m: &Matrix) -> Result<SpectralPair> {
    if m.max_abs() == 0.0 {
        return Err(Error::InvalidArgument("spectral norm of a zero matrix".into()));
    }
    let wide = m.rows() <= m.cols();
    let g = if wide { m.matmul_nt(m)? } else { m.gram() };
    let k = g.rows();
    let mut a = g.clone();
    let mut squarings = 0;
    // After s squarings the dominant direction is amplified by (λ₁/λ₂)^(2^s).
    for _ in 0..GRAM_SQUARINGS {
        let tr: f64 = (0..k).map(|i| a[(i, i)]).sum();
        if tr <= 0.0 || !tr.is_finite() {
            break;
        }
        a.scale(1.0 / tr);
        // With unit trace, ‖A‖²_F = Σpᵢ² reaches 1 once a single direction remains.
        if norm_sq(a.as_slice()) >= 1.0 - 1e-15 {
            break;
        }
        a = a.matmul(&a)?;
        squarings += 1;
    }
    // Every column of the squared matrix lies near the top eigenvector; take the largest.
    let best = (0..k)
        .max_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]))
        .expect("nonempty");
    let mut x = a.col(best);
    let xn = norm(&x);
    if xn == 0.0 || !xn.is_finite() {
        x = vec![0.0; k];
        x[best] = 1.0;
    } else {
        x.iter_mut().for_each(|v| *v /= xn);
    }
    // One power step on the Gram matrix, then the Rayleigh quotient.
    let gx = g.matvec(&x)?;
    let gn = norm(&gx);
    if gn > 0.0 {
        x = gx.iter().map(|v| v / gn).collect();
    }
    let other = if wide { m.matvec_t(&x)? } else { m.matvec(&x)? };
    let sigma = norm(&other);
    let y: Vec<f64> = other.iter().map(|v| v / sigma).collect();
    let (u, v) = if wide { (x, y) } else { (y, x) };
    Ok(SpectralPair { sigma, u, v, iters: squarings, converged: true })
}

const GRAM_SQUARINGS: usize = 40;

/// Largest singular value of `m`.
pub fn spectral_norm(m: &Matrix, tol: f64, max_iter: usize) -> Result<f64> {
    let p = spectral_top(m, None, tol, max_iter)?;
    if p.converged {
        Ok(p.sigma)
    } else {
        Err(Error::NonConvergence { iters: p.iters, last: p.sigma })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qr_of_identity_is_identity() {
        let q = orthonormalize(&Matrix::identity(4)).unwrap();
        assert!(q.sub(&Matrix::identity(4)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let m = Matrix::from_fn(5, 2, |i, _| i as f64);
        assert!(matches!(orthonormalize(&m), Err(Error::RankDeficient { column: 1, .. })));
    }

    #[test]
    fn cholesky_roundtrip() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0], vec![2.0, 3.0]]).unwrap();
        let x = solve_spd(&a, &[2.0, 1.0]).unwrap();
        let back = a.matvec(&x).unwrap();
        assert!((back[0] - 2.0).abs() < 1e-14 && (back[1] - 1.0).abs() < 1e-14);
        assert!((log_det_spd(&a).unwrap() - 8.0f64.ln()).abs() < 1e-14);
        assert_eq!(cholesky(&Matrix::diag(&[1.0, -1.0])), Err(Error::NotPositiveDefinite));
    }

    #[test]
    fn gram_squaring_handles_near_ties() {
        let m = Matrix::from_fn(3, 5, |i, j| if i == j { [2.0, 2.0 - 1e-9, 1.0][i] } else { 0.0 });
        let p = spectral_top_gram(&m).unwrap();
        assert!((p.sigma - 2.0).abs() < 1e-9);
        let t = spectral_top_gram(&m.transpose()).unwrap();
        assert!((t.sigma - p.sigma).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let s = spectral_norm(&Matrix::diag(&[3.0, 1.0]), 1e-12, 1000).unwrap();
        assert!((s - 3.0).abs() < 1e-12);
    }
}
