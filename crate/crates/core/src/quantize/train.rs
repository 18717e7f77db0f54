use serde::{Deserialize, Serialize};

use super::codebook::{quantize, Codebook, Precision, QuantizedWeights};
use crate::error::{Error, Result};
use crate::models::{epoch_order, Adam, Dataset, LossSpec, Network, Params, StepRecord, SubspaceModel, TrainConfig, TrainReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantTrainConfig {
    pub levels: usize,
    pub train: TrainConfig,
    /// Adam learning rate of the levels; defaults to the weight learning rate.
    pub level_lr: Option<f64>,
    pub precision: Precision,
}

/// Two or more levels became equal and were merged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseEvent {
    pub step: usize,
    pub levels_before: usize,
    pub levels_after: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedTraining {
    pub report: TrainReport,
    pub quantized: QuantizedWeights,
    pub collapses: Vec<CollapseEvent>,
}

/// Train a hard-mode model whose forward pass uses quantized subspace
/// weights. Gradients pass straight through the rounding to the continuous
/// weights; each level receives the summed gradient of the weights assigned
/// to it. With `initial` unset the codebook starts at quantiles of the
/// initial weights.
pub fn train_quantized<N: Network>(
    model: &mut SubspaceModel<N>,
    data: &Dataset,
    loss: &LossSpec,
    cfg: &QuantTrainConfig,
    initial: Option<Codebook>,
    rng: &crate::numeric::RngStream,
) -> Result<QuantizedTraining> {
    let projector = model.projector.clone().ok_or_else(|| Error::InvalidArgument("quantized training needs a projector".into()))?;
    let latent = match &mut model.params {
        Params::Hard { latent } => latent,
        _ => return Err(Error::InvalidArgument("quantized training needs a hard-mode model".into())),
    };
    if cfg.train.spectral_cap.is_some() {
        return Err(Error::InvalidArgument("spectral clamping is not defined for quantized weights".into()));
    }
    if cfg.train.batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be positive".into()));
    }
    let y = data.class_labels()?;
    let mut book = match initial {
        Some(c) => c,
        None => Codebook::from_quantiles(latent, cfg.levels, cfg.precision)?,
    };
    let precision = book.precision();
    let mut levels = book.levels().to_vec();
    let mut w_opt = Adam::new(latent.len(), cfg.train.lr);
    let mut c_opt = Adam::new(levels.len(), cfg.level_lr.unwrap_or(cfg.train.lr));
    let mut grad = vec![0.0; model.net.num_params()];
    let mut history = Vec::new();
    let mut collapses = Vec::new();
    let mut step = 0;
    for epoch in 0..cfg.train.epochs {
        for batch in epoch_order(rng, epoch, data.len()).chunks(cfg.train.batch_size) {
            let q = quantize(latent, &book)?;
            let ambient = projector.lift(&q.values())?;
            let xb = data.features.select_rows(batch);
            let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let risk = model.net.loss_grad(&ambient, &xb, &yb, loss, &mut grad)?;
            if !risk.is_finite() {
                return Err(Error::NonFiniteLoss { step });
            }
            let g = projector.project(&grad)?;
            let mut gc = vec![0.0; levels.len()];
            for (gi, &k) in g.iter().zip(&q.assignments) {
                gc[k] += gi;
            }
            w_opt.step(latent, &g);
            c_opt.step(&mut levels, &gc);
            levels.iter_mut().for_each(|v| *v = precision.round(*v));
            // Keep the levels sorted, carrying the optimizer state along.
            let mut perm: Vec<usize> = (0..levels.len()).collect();
            perm.sort_by(|&a, &b| levels[a].total_cmp(&levels[b]).then(a.cmp(&b)));
            if perm.iter().enumerate().any(|(i, &p)| i != p) {
                c_opt.permute(&perm);
                levels = perm.iter().map(|&p| levels[p]).collect();
            }
            let keep: Vec<usize> = (0..levels.len()).filter(|&i| i == 0 || levels[i] != levels[i - 1]).collect();
            if keep.len() < levels.len() {
                collapses.push(CollapseEvent { step, levels_before: levels.len(), levels_after: keep.len() });
                c_opt.retain(&keep);
                levels = keep.iter().map(|&i| levels[i]).collect();
            }
            book = Codebook::from_raw(levels.clone(), precision);
            history.push(StepRecord { step, epoch, objective: risk, risk, distortion: 0.0 });
            step += 1;
        }
    }
    let quantized = quantize(latent, &book)?;
    Ok(QuantizedTraining { report: TrainReport { steps: step, history, clamp_events: 0 }, quantized, collapses })
}
