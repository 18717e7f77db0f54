use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    ZeroOne,
    Squared,
    ClampedCrossEntropy,
}

/// A loss together with the constants the bounds need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    /// Probability floor for the clamped cross-entropy.
    pub p_min: f64,
    /// Almost-sure upper bound on the loss.
    pub c_bound: f64,
    /// Sub-Gaussian parameter, when known.
    pub sigma: Option<f64>,
    /// Lipschitz constant in the logits.
    pub lipschitz_beta: Option<f64>,
}

impl LossSpec {
    /// Misclassification loss: bounded by 1, hence 1/2-sub-Gaussian.
    pub fn zero_one() -> Self {
        Self { kind: LossKind::ZeroOne, p_min: 0.0, c_bound: 1.0, sigma: Some(0.5), lipschitz_beta: None }
    }

    /// `−log max(p̂_y, p_min)`, bounded by `−log p_min` and `√2`-Lipschitz.
    pub fn clamped_ce(p_min: f64) -> Self {
        let c = -p_min.ln();
        Self {
            kind: LossKind::ClampedCrossEntropy,
            p_min,
            c_bound: c,
            sigma: Some(c / 2.0),
            lipschitz_beta: Some(std::f64::consts::SQRT_2),
        }
    }

    /// Squared error against the one-hot target (unbounded unless `c_bound` says otherwise).
    pub fn squared() -> Self {
        Self { kind: LossKind::Squared, p_min: 0.0, c_bound: f64::INFINITY, sigma: None, lipschitz_beta: None }
    }

    /// Loss of one sample given its logits.
    pub fn value(&self, logits: &[f64], y: usize) -> f64 {
        match self.kind {
            LossKind::ZeroOne => f64::from(argmax(logits) != y),
            LossKind::ClampedCrossEntropy => (log_sum_exp(logits) - logits[y]).min(self.c_bound),
            LossKind::Squared => logits
                .iter()
                .enumerate()
                .map(|(k, u)| (u - f64::from(k == y)).powi(2))
                .sum(),
        }
    }

    /// Loss of one sample and its gradient with respect to the logits.
    pub fn value_and_grad(&self, logits: &[f64], y: usize, grad: &mut [f64]) -> Result<f64> {
        match self.kind {
            LossKind::ZeroOne => Err(Error::NondifferentiableLoss),
            LossKind::ClampedCrossEntropy => {
                let lse = log_sum_exp(logits);
                let raw = lse - logits[y];
                if raw >= self.c_bound {
                    // Flat region: p̂_y is at the floor.
                    grad.iter_mut().for_each(|g| *g = 0.0);
                    return Ok(self.c_bound);
                }
                for (k, g) in grad.iter_mut().enumerate() {
                    *g = (logits[k] - lse).exp() - f64::from(k == y);
                }
                Ok(raw)
            }
            LossKind::Squared => {
                let mut s = 0.0;
                for (k, g) in grad.iter_mut().enumerate() {
                    let r = logits[k] - f64::from(k == y);
                    *g = 2.0 * r;
                    s += r * r;
                }
                Ok(s)
            }
        }
    }
}

/// Index of the largest logit; ties go to the larger index, so a binary
/// classifier with logits `[0, f]` predicts class 1 when `f ≥ 0`.
pub(crate) fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in xs.iter().enumerate() {
        if *x >= xs[best] {
            best = i;
        }
    }
    best
}
