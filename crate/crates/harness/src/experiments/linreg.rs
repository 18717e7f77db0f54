use slicegen_core::bounds::{bound_linreg, linreg_exact_gen_error, linreg_gen_error_mc, linreg_terms, GenErrorEstimate};
use slicegen_core::numeric::{gaussian_matrix, purpose, Summary};
use slicegen_core::parallel::par_map;
use slicegen_core::projectors::sample;

use super::{Context, Outcome};
use crate::error::Result;
use crate::record::GridPoint;

/// Fixed Gaussian design and true weights per `n`, `n_theta` projectors, and
/// `n_runs` noise draws per projector for the Monte Carlo error.
pub(super) fn run(ctx: &Context<'_>, pt: &GridPoint) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let (big_d, d, n, sigma) = (cfg.model.ambient, pt.d, pt.n, cfg.model.noise_sigma);
    // The design depends on n only, so every d sees the same problem.
    let x = gaussian_matrix(&ctx.root.derive(&[purpose::DATA, n as u64]), n, big_d);
    let w_star = gaussian_matrix(&ctx.root.derive(&[purpose::DATA, n as u64, 1]), 1, big_d).into_vec();
    let rng = ctx.root.derive(&pt.tags());
    let projectors = par_map(cfg.n_theta, |t| sample(cfg.family, &rng.derive(&[purpose::PROJECTOR, t as u64]), big_d, d))
        .into_iter()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let per_theta = par_map(cfg.n_theta, |t| -> Result<(GenErrorEstimate, f64)> {
        let mc = linreg_gen_error_mc(&x, &w_star, sigma, &projectors[t], cfg.n_runs, &rng.derive(&[purpose::NOISE, t as u64]))?;
        let terms = linreg_terms(&x, &w_star, sigma, &projectors[t])?;
        let max_lambda = terms.iter().fold(0.0f64, |m, term| m.max(term.lambda));
        Ok((mc, max_lambda))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    // Pool the per-projector estimates: the exact error does not depend on Θ,
    // so the mean of the T means has standard error √(Σ s_t²)/T.
    let means: Vec<f64> = per_theta.iter().map(|(g, _)| g.summary.mean).collect();
    let t = per_theta.len() as f64;
    let pooled_stderr = per_theta.iter().map(|(g, _)| g.summary.stderr.powi(2)).sum::<f64>().sqrt() / t;
    let band = Summary::of(&means);
    let summary = Summary { stderr: pooled_stderr, count: per_theta.iter().map(|(g, _)| g.summary.count).sum(), ..band };
    let exact = linreg_exact_gen_error(sigma, d, n);
    let gen = GenErrorEstimate { summary, exact: Some(exact) };
    let report = bound_linreg(&x, &w_star, sigma, &projectors)?.with_gen_error(gen);
    let mut out = Outcome { big_d, ..Default::default() };
    out.metric("exact_gen_error", exact);
    out.metric("mc_gen_error", summary.mean);
    out.metric("mc_stderr", pooled_stderr);
    out.metric("max_noncentrality", per_theta.iter().fold(0.0f64, |m, (_, l)| m.max(*l)));
    out.metric("bound", report.value());
    out.bands.insert("bound".into(), report.summary);
    out.bands.insert("gen_error".into(), summary);
    out.report = Some(report);
    Ok(out)
}
