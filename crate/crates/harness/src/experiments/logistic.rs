use slicegen_core::bounds::{bound_individual_sample, BoundConstants, GenErrorEstimate, MiSource};
use slicegen_core::mi::{estimate, SamplePairs};
use slicegen_core::models::{accuracy, logistic_subspace_fit, LinearBinary};
use slicegen_core::numeric::{purpose, Matrix};
use slicegen_core::parallel::par_map;
use slicegen_core::projectors::sample;

use super::{cell, Context, Outcome};
use crate::config::DataSource;
use crate::data::gen_two_gaussian_classification;
use crate::error::{HarnessError, Result};
use crate::record::GridPoint;

const NEWTON_TOL: f64 = 1e-10;

/// For each projector, fit `n_runs` independent datasets; the information
/// between the fitted subspace weights and the first training sample is
/// estimated from those `n_runs` pairs. Loss is 0-1, so `C = 1`.
pub(super) fn run(ctx: &Context<'_>, pt: &GridPoint) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let DataSource::TwoGaussians { features: s } = cfg.data else {
        return Err(HarnessError::config("logistic experiment needs two_gaussians data"));
    };
    let net = LinearBinary { features: s };
    let big_d = s + 1;
    let (d, n) = (pt.d, pt.n);
    let (runs, thetas) = (cfg.n_runs, cfg.n_theta);
    let projectors = par_map(thetas, |t| sample(cfg.family, &ctx.root.derive(&[purpose::PROJECTOR, d as u64, t as u64]), big_d, d))
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    // Datasets depend on (n, run) only, so projectors and dimensions are compared on the same draws.
    let fits = par_map(thetas * runs, |k| -> Result<(Vec<f64>, Vec<f64>, f64, f64)> {
        let (t, r) = (k / runs, k % runs);
        let split = gen_two_gaussian_classification(&ctx.root.derive(&[purpose::DATA, n as u64, r as u64]), s, n)?;
        let y = split.train.class_labels()?;
        let fit = logistic_subspace_fit(&projectors[t], &split.train.features, y, cfg.model.ridge, cfg.model.newton_iters, NEWTON_TOL)?;
        let train_acc = accuracy(&net, &fit.ambient, &split.train)?;
        let test_acc = accuracy(&net, &fit.ambient, &split.test)?;
        let mut z0 = split.train.features.row(0).to_vec();
        z0.push(y[0] as f64);
        Ok((fit.latent, z0, train_acc, test_acc))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let estimates = par_map(thetas, |t| -> Result<_> {
        let rows = &fits[t * runs..(t + 1) * runs];
        let xs = Matrix::from_vec(runs, d, rows.iter().flat_map(|f| f.0.iter().copied()).collect())?;
        let ys = Matrix::from_vec(runs, s + 1, rows.iter().flat_map(|f| f.1.iter().copied()).collect())?;
        Ok(estimate(&SamplePairs::new(xs, ys)?, &cfg.estimator, &ctx.root.derive(&[purpose::CRITIC, d as u64, n as u64, t as u64]))?)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let mut out = Outcome { big_d, ..Default::default() };
    for (k, f) in fits.iter().enumerate() {
        let (train_err, test_err) = (1.0 - f.2, 1.0 - f.3);
        out.cells.push(cell(k % runs, k / runs, &[("train_error", train_err), ("test_error", test_err), ("gen_error", test_err - train_err)]));
    }
    let gaps: Vec<f64> = out.cells.iter().map(|c| c.values["gen_error"]).collect();
    let mi: Vec<Vec<f64>> = estimates.iter().map(|e| vec![e.value]).collect();
    let source = MiSource {
        method: cfg.estimator.label(),
        n_samples: runs,
        near_deterministic: estimates.iter().any(|e| e.near_deterministic),
    };
    let consts = BoundConstants { c: Some(1.0), d, big_d, n, ..Default::default() };
    let report = bound_individual_sample(&mi, &consts, source)?.with_gen_error(GenErrorEstimate::from_runs(&gaps));
    out.band_cells(&["train_error", "test_error", "gen_error"]);
    out.band("mi", &estimates.iter().map(|e| e.value).collect::<Vec<_>>());
    out.bands.insert("bound".into(), report.summary);
    out.metric("mi_mean", out.bands["mi"].mean);
    out.metric("near_deterministic_thetas", estimates.iter().filter(|e| e.near_deterministic).count() as f64);
    out.metric("bound", report.value());
    out.metric("gen_error", report.gen_error.as_ref().map_or(f64::NAN, |g| g.summary.mean));
    out.report = Some(report);
    Ok(out)
}
