use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::loss::LossSpec;
use crate::error::{Error, Result};
use crate::numeric::{norm, RngStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub trials: usize,
    /// Largest `|ℓ(a) − ℓ(b)| / ‖a − b‖` seen.
    pub max_ratio: f64,
    pub bound: f64,
    /// The pair of logit vectors and label attaining `max_ratio`.
    pub witness: (Vec<f64>, Vec<f64>, usize),
    pub passed: bool,
}

/// Empirically probe the claimed Lipschitz constant of a loss in its logits.
/// Half of the pairs are drawn near the clamp threshold, where a kink sits.
pub fn lipschitz_check(loss: &LossSpec, classes: usize, trials: usize, rng: &RngStream) -> Result<LipschitzReport> {
    let bound = loss.lipschitz_beta.ok_or(Error::MissingConstant("lipschitz_beta"))?;
    if classes < 2 {
        return Err(Error::InvalidArgument("need at least two classes".into()));
    }
    let mut r = rng.rng();
    let mut best = (0.0, (vec![0.0; classes], vec![0.0; classes], 0));
    for t in 0..trials {
        let y = r.gen_range(0..classes);
        let scale: f64 = if t % 2 == 0 { 5.0 } else { 1.0 };
        let mut a: Vec<f64> = (0..classes).map(|_| scale * r.sample::<f64, _>(StandardNormal)).collect();
        if t % 2 == 1 && loss.c_bound.is_finite() {
            // Push the true logit down until the raw loss is near the clamp.
            a[y] -= loss.c_bound;
        }
        let eps = 10f64.powf(r.gen_range(-6.0..0.0));
        let b: Vec<f64> = a.iter().map(|v| v + eps * r.sample::<f64, _>(StandardNormal)).collect();
        let dist = norm(&a.iter().zip(&b).map(|(p, q)| p - q).collect::<Vec<_>>());
        if dist == 0.0 {
            continue;
        }
        let ratio = (loss.value(&a, y) - loss.value(&b, y)).abs() / dist;
        if ratio > best.0 {
            best = (ratio, (a, b, y));
        }
    }
    Ok(LipschitzReport { trials, max_ratio: best.0, bound, witness: best.1, passed: best.0 <= bound * (1.0 + 1e-9) })
}
