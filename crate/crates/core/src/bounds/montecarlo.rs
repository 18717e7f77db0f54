use rand_distr::{Distribution, StandardNormal};

use super::evaluate::{gme_exact_gen_error, linreg_exact_gen_error};
use super::report::GenErrorEstimate;
use crate::error::{dim_check, Result};
use crate::models::{gme_solve, ols_subspace_solve};
use crate::numeric::{gaussian_matrix, norm_sq, purpose, Matrix, RngStream};
use crate::parallel::par_map;
use crate::projectors::{sample, Family};

fn collect(gaps: Vec<Result<f64>>) -> Result<Vec<f64>> {
    gaps.into_iter().collect()
}

/// Monte Carlo estimate of the Gaussian mean generalization gap with a fresh
/// projector and sample per run. Population risk is exact: `‖W‖² + D`.
pub fn gme_gen_error_mc(big_d: usize, d: usize, n: usize, runs: usize, family: Family, rng: &RngStream) -> Result<GenErrorEstimate> {
    let gaps = collect(par_map(runs, |r| {
        let run = rng.child(r as u64);
        let p = sample(family, &run.child(purpose::PROJECTOR), big_d, d)?;
        let z = gaussian_matrix(&run.child(purpose::DATA), n, big_d);
        let (_, w) = gme_solve(&p, &z)?;
        let train = (0..n).map(|i| norm_sq(&w.iter().zip(z.row(i)).map(|(a, b)| a - b).collect::<Vec<_>>())).sum::<f64>() / n as f64;
        Ok(norm_sq(&w) + big_d as f64 - train)
    }))?;
    let mut est = GenErrorEstimate::from_runs(&gaps);
    est.exact = Some(gme_exact_gen_error(d, n));
    Ok(est)
}

/// Monte Carlo estimate of the least-squares gap on a fixed design with
/// fresh noise per run. Test risk is exact: `(1/n)‖X(W* − ΘW')‖² + σ²`.
pub fn linreg_gen_error_mc(
    x: &Matrix,
    w_star: &[f64],
    sigma_noise: f64,
    projector: &crate::projectors::Projector,
    runs: usize,
    rng: &RngStream,
) -> Result<GenErrorEstimate> {
    dim_check("true weights", x.cols(), w_star.len())?;
    let n = x.rows();
    let mean_y = x.matvec(w_star)?;
    let gaps = collect(par_map(runs, |r| {
        let mut g = rng.derive(&[purpose::NOISE, r as u64]).rng();
        let y: Vec<f64> = mean_y
            .iter()
            .map(|m| {
                let e: f64 = StandardNormal.sample(&mut g);
                m + sigma_noise * e
            })
            .collect();
        let fit = ols_subspace_solve(projector, x, &y)?;
        let pred = x.matvec(&fit.ambient)?;
        let train = pred.iter().zip(&y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n as f64;
        let test = pred.iter().zip(&mean_y).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / n as f64 + sigma_noise * sigma_noise;
        Ok(test - train)
    }))?;
    let mut est = GenErrorEstimate::from_runs(&gaps);
    est.exact = Some(linreg_exact_gen_error(sigma_noise, projector.dim(), n));
    Ok(est)
}
