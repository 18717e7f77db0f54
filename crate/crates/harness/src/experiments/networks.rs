use slicegen_core::bounds::{
    bits_to_nats, bound_disintegrated, bound_quantized_rate_distortion, composite_lipschitz, BoundConstants,
    GenErrorEstimate, MiSource,
};
use slicegen_core::models::{accuracy, evaluate_risk, train, Dataset, Mlp, Network, SubspaceModel};
use slicegen_core::numeric::{norm, purpose, RngStream};
use slicegen_core::parallel::par_map;
use slicegen_core::projectors::{sample, Projector};
use slicegen_core::quantize::{quantize, train_quantized, Codebook, Precision, QuantTrainConfig};

use super::{cell, Context, Outcome};
use crate::config::DataSource;
use crate::data::{split_pool, Split};
use crate::error::{HarnessError, Result};
use crate::record::{CellRecord, GridPoint};

/// 0-1 loss is bounded by 1, hence 1/2-sub-Gaussian.
const ZERO_ONE_SIGMA: f64 = 0.5;

fn pool<'a>(ctx: &'a Context<'_>) -> Result<&'a Dataset> {
    ctx.pool.as_ref().ok_or_else(|| HarnessError::config("network experiments need a loaded data pool"))
}

fn network(ctx: &Context<'_>) -> Result<Mlp> {
    let pool = pool(ctx)?;
    let classes = pool.num_classes().ok_or_else(|| HarnessError::config("network experiments need class labels"))?;
    let mut widths = vec![pool.features.cols()];
    widths.extend(&ctx.cfg.model.hidden);
    widths.push(classes);
    Ok(Mlp::new(widths))
}

/// Training subset of run `r`, shared by every d, λ and projector.
fn split(ctx: &Context<'_>, n: usize, r: usize) -> Result<Split> {
    let test = match &ctx.cfg.data {
        DataSource::Mnist { test_size, .. } => *test_size,
        _ => None,
    };
    split_pool(pool(ctx)?, n, test, &ctx.root.derive(&[purpose::SUBSET, n as u64, r as u64]))
}

/// Streams of one (run, projector) cell. They do not involve λ or the
/// codebook size, so those axes compare paired trainings.
struct CellStreams {
    projector: RngStream,
    init: RngStream,
    batches: RngStream,
}

fn streams(ctx: &Context<'_>, d: usize, r: usize, t: usize) -> CellStreams {
    let (d, r, t) = (d as u64, r as u64, t as u64);
    CellStreams {
        projector: ctx.root.derive(&[purpose::PROJECTOR, d, t]),
        init: ctx.root.derive(&[purpose::INIT, d, r, t]),
        batches: ctx.root.derive(&[purpose::BATCH, d, r, t]),
    }
}

fn projector(ctx: &Context<'_>, s: &CellStreams, big_d: usize, d: usize) -> Result<Projector> {
    Ok(sample(ctx.cfg.family, &s.projector, big_d, d)?)
}

/// Run `f` on every (run, projector) cell in a fixed order.
fn cells<T: Send>(ctx: &Context<'_>, f: impl Fn(usize, usize) -> Result<T> + Sync + Send) -> Result<Vec<(usize, usize, T)>> {
    let (runs, thetas) = (ctx.cfg.n_runs, ctx.cfg.n_theta);
    par_map(runs * thetas, |k| {
        let (r, t) = (k / thetas, k % thetas);
        f(r, t).map(|v| (r, t, v))
    })
    .into_iter()
    .collect()
}

fn levels(pt: &GridPoint) -> Result<usize> {
    pt.levels.ok_or_else(|| HarnessError::config("this experiment needs grid.levels"))
}

/// Accuracy pair of subspace weights `latent` under `p`.
fn accuracies(net: &Mlp, p: &Projector, latent: Vec<f64>, split: &Split) -> Result<(f64, f64)> {
    let w = SubspaceModel::with_latent(net.clone(), p.clone(), latent)?.ambient_weights()?;
    Ok((accuracy(net, &w, &split.train)?, accuracy(net, &w, &split.test)?))
}

/// Bit-count bound of quantized cells, with the 0-1 generalization gap.
fn bit_report(out: &mut Outcome, d: usize, big_d: usize, n: usize) -> Result<()> {
    let nats: Vec<f64> = out.cells.iter().map(|c| bits_to_nats(c.values["bits"] as u64)).collect();
    let gaps: Vec<f64> = out.cells.iter().map(|c| c.values["gen_error"]).collect();
    let consts = BoundConstants { sigma: Some(ZERO_ONE_SIGMA), d, big_d, n, ..Default::default() };
    let report = bound_disintegrated(&nats, &consts, MiSource::bits())?.with_gen_error(GenErrorEstimate::from_runs(&gaps));
    for (c, b) in out.cells.iter_mut().zip(&report.per_theta) {
        c.values.insert("bound".into(), *b);
    }
    out.metric("bound", report.value());
    out.metric("vacuous", f64::from(u8::from(report.value() >= 1.0)));
    out.bands.insert("bound".into(), report.summary);
    out.report = Some(report);
    Ok(())
}

/// `q` holds (train, test) accuracy; the 0-1 gap test error − train error
/// equals train accuracy − test accuracy.
fn quantized_cell_values(run: usize, theta: usize, bits: u64, counts: &[usize], q: (f64, f64)) -> CellRecord {
    let mut c = cell(
        run,
        theta,
        &[
            ("bits", bits as f64),
            ("levels_used", counts.len() as f64),
            ("train_acc", q.0),
            ("test_acc", q.1),
            ("gen_error", q.0 - q.1),
        ],
    );
    for (k, n) in counts.iter().enumerate() {
        c.values.insert(format!("count_{k}"), *n as f64);
    }
    c
}

fn level_counts(assignments: &[usize], levels: usize) -> Vec<usize> {
    let mut counts = vec![0usize; levels];
    for &a in assignments {
        counts[a] += 1;
    }
    counts
}

/// Hard-subspace MLP trained without quantization, then fine-tuned with
/// quantized weights; both are reported.
pub(super) fn run_quantized(ctx: &Context<'_>, pt: &GridPoint) -> Result<Outcome> {
    let net = network(ctx)?;
    let big_d = net.num_params();
    let (d, n, l) = (pt.d, pt.n, levels(pt)?);
    let (tc, loss) = (ctx.train_config(), ctx.loss());
    let results = cells(ctx, |r, t| -> Result<(CellRecord, f64, f64)> {
        let data = split(ctx, n, r)?;
        let s = streams(ctx, d, r, t);
        let p = projector(ctx, &s, big_d, d)?;
        let mut cm = SubspaceModel::new_hard(net.clone(), p.clone(), &s.init)?;
        train(&mut cm, &data.train, &loss, &tc, &s.batches)?;
        let c = accuracies(&net, &p, cm.latent().expect("hard mode").to_vec(), &data)?;
        // Quantization-aware fine-tuning from the continuous solution, with the
        // codebook seeded at quantiles of the trained weights.
        let mut qm = cm;
        let qcfg = QuantTrainConfig { levels: l, train: tc.clone(), level_lr: None, precision: Precision::Half };
        let qt = train_quantized(&mut qm, &data.train, &loss, &qcfg, None, &s.batches.derive(&[purpose::QUANTIZE]))?;
        let q = accuracies(&net, &p, qt.quantized.values(), &data)?;
        let counts = level_counts(&qt.quantized.assignments, qt.quantized.levels());
        Ok((quantized_cell_values(r, t, qt.quantized.bit_bound, &counts, q), c.0, c.1))
    })?;
    let mut out = Outcome { big_d, ..Default::default() };
    for (_, _, (mut c, train_acc, test_acc)) in results {
        c.values.insert("train_acc_unquantized".into(), train_acc);
        c.values.insert("test_acc_unquantized".into(), test_acc);
        out.cells.push(c);
    }
    bit_report(&mut out, d, big_d, n)?;
    out.band_cells(&["bits", "train_acc", "test_acc", "gen_error", "train_acc_unquantized", "test_acc_unquantized"]);
    for key in ["bits", "train_acc", "test_acc", "train_acc_unquantized", "test_acc_unquantized"] {
        let v = out.bands[key].mean;
        out.metric(key, v);
    }
    out.metric("accuracy_drop", out.metrics["train_acc_unquantized"] - out.metrics["train_acc"]);
    Ok(out)
}

/// Soft-subspace MLP with the distortion penalty and per-layer spectral cap,
/// evaluated with the quantized rate-distortion bound.
pub(super) fn run_rate_distortion(ctx: &Context<'_>, pt: &GridPoint) -> Result<Outcome> {
    let net = network(ctx)?;
    let big_d = net.num_params();
    let (d, n) = (pt.d, pt.n);
    let lambda = pt.lambda.ok_or_else(|| HarnessError::config("rate-distortion experiment needs grid.lambda"))?;
    let (tc, loss) = (ctx.train_config(), ctx.loss());
    let cap = tc.spectral_cap.ok_or_else(|| HarnessError::config("rate-distortion bound needs model.spectral_cap"))?;
    let radius = match &ctx.cfg.data {
        DataSource::Mnist { radius: Some(r), .. } => *r,
        _ => return Err(HarnessError::config("rate-distortion bound needs data.radius")),
    };
    let shapes = net.layer_shapes();
    let beta = loss.lipschitz_beta.ok_or_else(|| HarnessError::config("loss has no Lipschitz constant"))?;
    let lipschitz = composite_lipschitz(beta, cap, shapes.len(), radius);
    // ‖ΘᵀW‖ ≤ ‖W‖_F ≤ cap·√(Σ rank), since each layer has spectral norm at most cap.
    let m_bound = cap * (shapes.iter().map(|&(r, c)| r.min(c)).sum::<usize>() as f64).sqrt();
    let results = cells(ctx, |r, t| -> Result<CellRecord> {
        let data = split(ctx, n, r)?;
        let s = streams(ctx, d, r, t);
        let p = projector(ctx, &s, big_d, d)?;
        let mut m = SubspaceModel::new_soft(net.clone(), p.clone(), lambda, &s.init)?;
        train(&mut m, &data.train, &loss, &tc, &s.batches)?;
        let w = m.ambient_weights()?;
        let train_risk = evaluate_risk(&net, &w, &data.train, &loss)?;
        let test_risk = evaluate_risk(&net, &w, &data.test, &loss)?;
        Ok(cell(
            r,
            t,
            &[
                ("rho", m.distortion()?),
                ("latent_norm", norm(&p.project(&w)?)),
                ("train_risk", train_risk),
                ("test_risk", test_risk),
                ("gen_error", test_risk - train_risk),
                ("train_acc", accuracy(&net, &w, &data.train)?),
                ("test_acc", accuracy(&net, &w, &data.test)?),
            ],
        ))
    })?;
    let mut out = Outcome { big_d, ..Default::default() };
    out.cells = results.into_iter().map(|(_, _, c)| c).collect();
    let rho: Vec<f64> = out.cells.iter().map(|c| c.values["rho"]).collect();
    let norms: Vec<f64> = out.cells.iter().map(|c| c.values["latent_norm"]).collect();
    let gaps: Vec<f64> = out.cells.iter().map(|c| c.values["gen_error"]).collect();
    let consts = BoundConstants {
        c: Some(loss.c_bound),
        lipschitz: Some(lipschitz),
        m: Some(m_bound),
        d,
        big_d,
        n,
        lambda: Some(lambda),
        ..Default::default()
    };
    let report = bound_quantized_rate_distortion(&rho, &norms, &consts)?.with_gen_error(GenErrorEstimate::from_runs(&gaps));
    let terms = report.terms.clone().expect("rate-distortion reports carry terms");
    for ((c, dist), (rate, b)) in out.cells.iter_mut().zip(&terms.distortion).zip(terms.rate.iter().zip(&report.per_theta)) {
        c.values.insert("distortion_term".into(), *dist);
        c.values.insert("rate_term".into(), *rate);
        c.values.insert("bound".into(), *b);
    }
    out.band_cells(&[
        "bound",
        "distortion_term",
        "rate_term",
        "gen_error",
        "train_risk",
        "test_risk",
        "train_acc",
        "test_acc",
        "rho",
        "latent_norm",
    ]);
    for key in ["distortion_term", "rate_term", "rho", "train_risk", "test_risk", "train_acc", "test_acc"] {
        let v = out.bands[key].mean;
        out.metric(key, v);
    }
    out.metric("bound", report.value());
    out.metric("lipschitz", lipschitz);
    out.metric("weight_norm_bound", m_bound);
    out.metric("max_latent_norm", norms.iter().fold(0.0f64, |a, b| a.max(*b)));
    out.report = Some(report);
    Ok(out)
}

/// Train each cell once without quantization, then quantize the final
/// subspace weights with a quantile codebook of the point's size.
pub(super) fn run_level_sweep(ctx: &Context<'_>, pt: &GridPoint) -> Result<Outcome> {
    let net = network(ctx)?;
    let big_d = net.num_params();
    let (d, n, l) = (pt.d, pt.n, levels(pt)?);
    let (tc, loss) = (ctx.train_config(), ctx.loss());
    let results = cells(ctx, |r, t| -> Result<CellRecord> {
        let data = split(ctx, n, r)?;
        let s = streams(ctx, d, r, t);
        let p = projector(ctx, &s, big_d, d)?;
        let key = (d, n, r, t);
        let cached = ctx.latents.lock().expect("latent cache poisoned").get(&key).cloned();
        let latent = match cached {
            Some(v) => v,
            None => {
                let mut m = SubspaceModel::new_hard(net.clone(), p.clone(), &s.init)?;
                train(&mut m, &data.train, &loss, &tc, &s.batches)?;
                let v = m.latent().expect("hard mode").to_vec();
                ctx.latents.lock().expect("latent cache poisoned").insert(key, v.clone());
                v
            }
        };
        let book = Codebook::from_quantiles(&latent, l, Precision::Half)?;
        let qw = quantize(&latent, &book)?;
        let q = accuracies(&net, &p, qw.values(), &data)?;
        let counts = level_counts(&qw.assignments, qw.levels());
        let mut c = quantized_cell_values(r, t, qw.bit_bound, &counts, q);
        c.values.insert("max_distortion".into(), qw.max_distortion);
        Ok(c)
    })?;
    let mut out = Outcome { big_d, ..Default::default() };
    out.cells = results.into_iter().map(|(_, _, c)| c).collect();
    bit_report(&mut out, d, big_d, n)?;
    out.band_cells(&["bits", "train_acc", "test_acc", "gen_error", "max_distortion"]);
    for key in ["bits", "train_acc", "test_acc"] {
        let v = out.bands[key].mean;
        out.metric(key, v);
    }
    Ok(out)
}
