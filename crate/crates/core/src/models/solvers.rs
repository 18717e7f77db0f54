use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Error, Result};
use crate::numeric::{cholesky, cholesky_solve, Matrix};
use crate::projectors::Projector;

/// Minimizer of the mean squared distance `(1/n)Σ‖Θw' − z_i‖²` over `w'`:
/// `w' = Θᵀz̄`. Returns `(w', Θw')`.
pub fn gme_solve(projector: &Projector, samples: &Matrix) -> Result<(Vec<f64>, Vec<f64>)> {
    dim_check("sample dimension", projector.ambient(), samples.cols())?;
    if samples.rows() == 0 {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    let mut mean = vec![0.0; samples.cols()];
    for i in 0..samples.rows() {
        crate::numeric::axpy(1.0, samples.row(i), &mut mean);
    }
    let n = samples.rows() as f64;
    mean.iter_mut().for_each(|v| *v /= n);
    let latent = projector.project(&mean)?;
    let ambient = projector.lift(&latent)?;
    Ok((latent, ambient))
}

/// Least squares restricted to the subspace.
#[derive(Debug, Clone)]
pub struct OlsFit {
    pub latent: Vec<f64>,
    pub ambient: Vec<f64>,
    /// `XΘ`, one row per sample.
    pub features: Matrix,
    /// Cholesky factor of `(XΘ)ᵀ(XΘ)`.
    pub gram_chol: Matrix,
}

impl OlsFit {
    /// Leverage `h_i = x_iᵀΘ G⁻¹ Θᵀx_i` of sample `i`.
    pub fn leverage(&self, i: usize) -> Result<f64> {
        let f = self.features.row(i);
        let s = cholesky_solve(&self.gram_chol, f)?;
        Ok(crate::numeric::dot(f, &s))
    }
}

/// `argmin_{w'} ‖y − XΘw'‖²` through the normal equations.
pub fn ols_subspace_solve(projector: &Projector, x: &Matrix, y: &[f64]) -> Result<OlsFit> {
    dim_check("design columns", projector.ambient(), x.cols())?;
    dim_check("responses", x.rows(), y.len())?;
    let features = projector.project_rows(x)?;
    let gram = features.gram();
    let gram_chol = cholesky(&gram).map_err(|_| Error::SingularGram)?;
    let rhs = features.matvec_t(y)?;
    let latent = cholesky_solve(&gram_chol, &rhs)?;
    let ambient = projector.lift(&latent)?;
    Ok(OlsFit { latent, ambient, features, gram_chol })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub latent: Vec<f64>,
    /// `(w̄, w₀)` in the ambient space.
    pub ambient: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Final regularized mean log-loss.
    pub objective: f64,
}

fn log1pexp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Ridge-regularized logistic regression on the subspace features `[x, 1]Θ`,
/// labels in `{0, 1}`. Minimizes `(1/n)Σ log(1 + e^{-s_i f_iᵀw'}) + (ridge/2)‖w'‖²`
/// by damped Newton.
pub fn logistic_subspace_fit(
    projector: &Projector,
    x: &Matrix,
    y: &[usize],
    ridge: f64,
    max_iter: usize,
    tol: f64,
) -> Result<LogisticFit> {
    dim_check("design columns + intercept", projector.ambient(), x.cols() + 1)?;
    dim_check("labels", x.rows(), y.len())?;
    if y.iter().any(|&c| c > 1) {
        return Err(Error::InvalidArgument("labels must be 0 or 1".into()));
    }
    if !(ridge > 0.0) {
        return Err(Error::InvalidArgument("ridge must be positive".into()));
    }
    let ones = Matrix::from_fn(x.rows(), 1, |_, _| 1.0);
    let f = projector.project_rows(&x.hstack(&ones)?)?;
    let (n, d) = f.shape();
    let sgn: Vec<f64> = y.iter().map(|&c| if c == 1 { 1.0 } else { -1.0 }).collect();
    let objective = |w: &[f64]| -> f64 {
        let m = f.matvec(w).expect("shape checked");
        let data: f64 = m.iter().zip(&sgn).map(|(s, t)| log1pexp(-t * s)).sum::<f64>() / n as f64;
        data + 0.5 * ridge * crate::numeric::norm_sq(w)
    };
    let mut w = vec![0.0; d];
    let mut obj = objective(&w);
    let mut converged = false;
    let mut iterations = 0;
    for it in 0..max_iter {
        iterations = it + 1;
        let m = f.matvec(&w)?;
        let mut grad: Vec<f64> = w.iter().map(|v| ridge * v).collect();
        let mut hess = Matrix::identity(d);
        hess.scale(ridge);
        for i in 0..n {
            let p = sigmoid(m[i]);
            let r = (p - if sgn[i] > 0.0 { 1.0 } else { 0.0 }) / n as f64;
            let wt = p * (1.0 - p) / n as f64;
            let row = f.row(i);
            crate::numeric::axpy(r, row, &mut grad);
            for a in 0..d {
                let ra = wt * row[a];
                for b in a..d {
                    hess.as_mut_slice()[a * d + b] += ra * row[b];
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                hess.as_mut_slice()[a * d + b] = hess.as_slice()[b * d + a];
            }
        }
        let step = cholesky_solve(&cholesky(&hess)?, &grad)?;
        let decrement = crate::numeric::dot(&grad, &step);
        if decrement / 2.0 <= tol {
            converged = true;
            break;
        }
        let mut t = 1.0;
        loop {
            let cand: Vec<f64> = w.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let c = objective(&cand);
            if c <= obj - 0.25 * t * decrement || t < 1e-12 {
                w = cand;
                obj = c;
                break;
            }
            t *= 0.5;
        }
    }
    let ambient = projector.lift(&w)?;
    Ok(LogisticFit { latent: w, ambient, iterations, converged, objective: obj })
}
