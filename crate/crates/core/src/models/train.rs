use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::loss::LossSpec;
use super::network::Network;
use super::optim::{Optimizer, OptimizerKind};
use super::subspace::{layer_blocks, Params, SubspaceModel};
use crate::error::{Error, Result};
use crate::numeric::{purpose, spectral_top_gram, RngStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub lr: f64,
    /// Learning rate of the complement weights `w₂` relative to `lr`.
    pub complement_lr_ratio: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Per-layer spectral-norm cap enforced after every step.
    pub spectral_cap: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            lr: 1e-3,
            complement_lr_ratio: 0.1,
            batch_size: 64,
            epochs: 1,
            spectral_cap: None,
        }
    }
}

/// One optimizer step. For soft models `objective = risk + λ·distortion`,
/// all three taken from the same evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub objective: f64,
    pub risk: f64,
    pub distortion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub steps: usize,
    pub history: Vec<StepRecord>,
    /// Steps after which at least one layer had to be rescaled.
    pub clamp_events: usize,
}

/// Shrink slightly past the cap so power-iteration error cannot leave a layer above it.
const CLAMP_SAFETY: f64 = 1e-9;

/// Mini-batch order for one epoch; a pure function of the stream and epoch.
pub(crate) fn epoch_order(rng: &RngStream, epoch: usize, n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng.derive(&[purpose::BATCH, epoch as u64]).rng());
    idx
}

/// Rescale every layer of `w` whose spectral norm exceeds `cap`. Returns the
/// per-layer spectral norms measured before clamping.
pub fn spectral_clamp(
    shapes: &[(usize, usize)],
    w: &mut [f64],
    cap: f64,
) -> Result<Vec<f64>> {
    let sigmas = layer_sigmas(shapes, w)?;
    let mut off = 0;
    for (&(r, c), &s) in shapes.iter().zip(&sigmas) {
        if s > cap {
            let f = cap / (s * (1.0 + CLAMP_SAFETY));
            w[off..off + r * c].iter_mut().for_each(|v| *v *= f);
        }
        off += r * c;
    }
    Ok(sigmas)
}

fn layer_sigmas(shapes: &[(usize, usize)], w: &[f64]) -> Result<Vec<f64>> {
    layer_blocks(shapes, w)?
        .iter()
        .map(|b| if b.max_abs() == 0.0 { Ok(0.0) } else { Ok(spectral_top_gram(b)?.sigma) })
        .collect()
}

/// Train `model` on `data`. Hard models update only the subspace coordinates,
/// soft models update `(w₁, w₂)` with the distortion penalty, full models
/// update `W` directly. With `spectral_cap` set, every layer is clamped after
/// every step.
pub fn train<N: Network>(
    model: &mut SubspaceModel<N>,
    data: &Dataset,
    loss: &LossSpec,
    cfg: &TrainConfig,
    rng: &RngStream,
) -> Result<TrainReport> {
    let y = data.class_labels()?;
    let n = data.len();
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch_size must be positive".into()));
    }
    let shapes = model.net.layer_shapes();
    let d_amb = model.net.num_params();
    let (mut opt1, mut opt2) = match &model.params {
        Params::Hard { latent } => (Optimizer::new(cfg.optimizer, latent.len(), cfg.lr), None),
        Params::Soft { w1, .. } => (
            Optimizer::new(cfg.optimizer, w1.len(), cfg.lr),
            Some(Optimizer::new(cfg.optimizer, w1.len(), cfg.lr * cfg.complement_lr_ratio)),
        ),
        Params::Full { w } => (Optimizer::new(cfg.optimizer, w.len(), cfg.lr), None),
    };
    let mut grad = vec![0.0; d_amb];
    let mut history = Vec::new();
    let mut step = 0usize;
    let mut clamp_events = 0usize;
    for epoch in 0..cfg.epochs {
        let order = epoch_order(rng, epoch, n);
        for batch in order.chunks(cfg.batch_size) {
            let xb = data.features.select_rows(batch);
            let yb: Vec<usize> = batch.iter().map(|&i| y[i]).collect();
            let w = model.ambient_weights()?;
            let risk = model.net.loss_grad(&w, &xb, &yb, loss, &mut grad)?;
            if !risk.is_finite() {
                return Err(Error::NonFiniteLoss { step });
            }
            let projector = model.projector.clone();
            let (objective, dist) = match &mut model.params {
                Params::Hard { latent } => {
                    let p = projector.as_ref().expect("hard mode has a projector");
                    let g = p.project(&grad)?;
                    opt1.step(latent, &g);
                    (risk, 0.0)
                }
                Params::Full { w } => {
                    opt1.step(w, &grad);
                    (risk, 0.0)
                }
                Params::Soft { w1, w2, lambda } => {
                    let p = projector.as_ref().expect("soft mode has a projector");
                    let cw = p.compress(&w)?;
                    let resid: Vec<f64> = w.iter().zip(&cw).map(|(a, b)| a - b).collect();
                    // Subgradient of Σ‖R_i‖₂ is Σ u_i v_iᵀ on each block.
                    let mut pen = vec![0.0; d_amb];
                    let mut dist = 0.0;
                    let mut off = 0;
                    for (block, &(r, c)) in layer_blocks(&shapes, &resid)?.iter().zip(&shapes) {
                        if block.max_abs() > 0.0 {
                            let sp = spectral_top_gram(block)?;
                            dist += sp.sigma;
                            for i in 0..r {
                                for j in 0..c {
                                    pen[off + i * c + j] = sp.u[i] * sp.v[j];
                                }
                            }
                        }
                        off += r * c;
                    }
                    let lam = *lambda;
                    let g1 = p.compress(&grad)?;
                    let full: Vec<f64> = grad.iter().zip(&pen).map(|(g, q)| g + lam * q).collect();
                    let cf = p.compress(&full)?;
                    let g2: Vec<f64> = full.iter().zip(&cf).map(|(a, b)| a - b).collect();
                    opt1.step(w1, &g1);
                    opt2.as_mut().expect("soft mode has two optimizers").step(w2, &g2);
                    (risk + lam * dist, dist)
                }
            };
            if let Some(cap) = cfg.spectral_cap {
                if clamp(model, &shapes, cap)? {
                    clamp_events += 1;
                }
            }
            history.push(StepRecord { step, epoch, objective, risk, distortion: dist });
            step += 1;
        }
    }
    Ok(TrainReport { steps: step, history, clamp_events })
}

/// Enforce the per-layer cap on the ambient weights. Returns whether anything changed.
fn clamp<N: Network>(
    model: &mut SubspaceModel<N>,
    shapes: &[(usize, usize)],
    cap: f64,
) -> Result<bool> {
    let mut w = model.ambient_weights()?;
    match &mut model.params {
        Params::Hard { latent } => {
            // Scaling one layer would leave the subspace, so shrink all of W'.
            let sigmas = layer_sigmas(shapes, &w)?;
            let worst = sigmas.iter().fold(0.0f64, |m, s| m.max(*s));
            if worst > cap {
                let f = cap / (worst * (1.0 + CLAMP_SAFETY));
                latent.iter_mut().for_each(|v| *v *= f);
                return Ok(true);
            }
            Ok(false)
        }
        Params::Full { w: full } => {
            let sigmas = spectral_clamp(shapes, full, cap)?;
            Ok(sigmas.iter().any(|s| *s > cap))
        }
        Params::Soft { w1, w2, .. } => {
            let sigmas = spectral_clamp(shapes, &mut w, cap)?;
            if sigmas.iter().any(|s| *s > cap) {
                // ΘΘᵀW + (I − ΘΘᵀ)W = W, so this reproduces the clamped W exactly.
                w1.copy_from_slice(&w);
                w2.copy_from_slice(&w);
                return Ok(true);
            }
            Ok(false)
        }
    }
}
