use slicegen_core::bounds::{bound_gme, gme_constant, gme_exact_gen_error, gme_gen_error_mc, GmeMi, MiSource};
use slicegen_core::mi::{estimate, gme_sliced_mi, Estimator, SamplePairs};
use slicegen_core::numeric::{gaussian_matrix, purpose, Matrix};
use slicegen_core::parallel::par_map;
use slicegen_core::projectors::sample;

use super::{Context, Outcome};
use crate::error::Result;
use crate::record::GridPoint;

/// Closed-form or estimated bound, exact error `2d/n`, and a Monte Carlo
/// error with a fresh projector and sample per run.
pub(super) fn run(ctx: &Context<'_>, pt: &GridPoint) -> Result<Outcome> {
    let cfg = ctx.cfg;
    let (big_d, d, n) = (cfg.model.ambient, pt.d, pt.n);
    let rng = ctx.root.derive(&pt.tags());
    let mc = gme_gen_error_mc(big_d, d, n, cfg.n_runs, cfg.family, &rng.child(purpose::DATA))?;
    let mi = match &cfg.estimator {
        Estimator::ClosedFormGaussian => GmeMi::ClosedForm,
        est => {
            // Pair ΘᵀZ̄ with the first sample across independent datasets.
            let per = par_map(cfg.n_theta, |t| -> Result<_> {
                let p = sample(cfg.family, &rng.derive(&[purpose::PROJECTOR, t as u64]), big_d, d)?;
                let mut xs = Vec::with_capacity(cfg.n_runs * d);
                let mut ys = Vec::with_capacity(cfg.n_runs * big_d);
                for r in 0..cfg.n_runs {
                    let z = gaussian_matrix(&rng.derive(&[purpose::NOISE, t as u64, r as u64]), n, big_d);
                    let zbar: Vec<f64> = (0..big_d).map(|j| (0..n).map(|i| z[(i, j)]).sum::<f64>() / n as f64).collect();
                    xs.extend(p.project(&zbar)?);
                    ys.extend_from_slice(z.row(0));
                }
                let pairs = SamplePairs::new(Matrix::from_vec(cfg.n_runs, d, xs)?, Matrix::from_vec(cfg.n_runs, big_d, ys)?)?;
                Ok(estimate(&pairs, est, &rng.derive(&[purpose::CRITIC, t as u64]))?)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let source = MiSource {
                method: est.label(),
                n_samples: cfg.n_runs,
                near_deterministic: per.iter().any(|e| e.near_deterministic),
            };
            GmeMi::Estimated { values: per.iter().map(|e| e.value).collect(), source }
        }
    };
    let report = bound_gme(big_d, d, n, mi)?.with_gen_error(mc.clone());
    let exact = gme_exact_gen_error(d, n);
    let mut out = Outcome { big_d, ..Default::default() };
    out.metric("exact_gen_error", exact);
    out.metric("mc_gen_error", mc.summary.mean);
    out.metric("mc_stderr", mc.summary.stderr);
    out.metric("closed_form_mi", gme_sliced_mi(d, n)?);
    out.metric("constant", gme_constant(big_d, d, n));
    out.metric("bound", report.value());
    out.bands.insert("bound".into(), report.summary);
    out.bands.insert("gen_error".into(), mc.summary);
    out.report = Some(report);
    Ok(out)
}
