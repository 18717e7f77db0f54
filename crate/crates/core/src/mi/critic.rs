use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Diagnostics, Estimator, MIEstimate, SamplePairs};
use crate::error::{Error, Result};
use crate::models::Adam;
use crate::numeric::{log_sum_exp, purpose, softmax_into, Matrix, RngStream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CriticConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Width of the moving average over per-epoch objectives.
    pub smoothing_window: usize,
}

impl Default for CriticConfig {
    fn default() -> Self {
        Self { hidden: 100, epochs: 200, batch_size: 64, lr: 1e-3, smoothing_window: 10 }
    }
}

/// One hidden ReLU layer with biases, scalar output.
struct Critic {
    input: usize,
    hidden: usize,
}

impl Critic {
    fn num_params(&self) -> usize {
        self.hidden * self.input + 2 * self.hidden + 1
    }

    fn init(&self, rng: &RngStream) -> Vec<f64> {
        let mut r = rng.rng();
        let mut p = Vec::with_capacity(self.num_params());
        let a1 = 1.0 / (self.input as f64).sqrt();
        let a2 = 1.0 / (self.hidden as f64).sqrt();
        p.extend((0..self.hidden * self.input + self.hidden).map(|_| r.gen_range(-a1..a1)));
        p.extend((0..self.hidden + 1).map(|_| r.gen_range(-a2..a2)));
        p
    }

    fn split<'a>(&self, p: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64], f64) {
        let (w1, rest) = p.split_at(self.hidden * self.input);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.hidden);
        (w1, b1, w2, b2[0])
    }

    /// Critic output for one input; writes the hidden activations into `h`.
    fn forward(&self, p: &[f64], z: &[f64], h: &mut [f64]) -> f64 {
        let (w1, b1, w2, b2) = self.split(p);
        let mut t = b2;
        for j in 0..self.hidden {
            let row = &w1[j * self.input..(j + 1) * self.input];
            let a = b1[j] + row.iter().zip(z).map(|(w, x)| w * x).sum::<f64>();
            h[j] = a.max(0.0);
            t += w2[j] * h[j];
        }
        t
    }

    /// Accumulate `coef · ∂T(z)/∂p` into `grad`.
    fn backward(&self, p: &[f64], z: &[f64], h: &[f64], coef: f64, grad: &mut [f64]) {
        let (_, _, w2, _) = self.split(p);
        let nw1 = self.hidden * self.input;
        for j in 0..self.hidden {
            grad[nw1 + self.hidden + j] += coef * h[j];
            if h[j] > 0.0 {
                let dh = coef * w2[j];
                grad[nw1 + j] += dh;
                let g = &mut grad[j * self.input..(j + 1) * self.input];
                for (gk, x) in g.iter_mut().zip(z) {
                    *gk += dh * x;
                }
            }
        }
        grad[nw1 + 2 * self.hidden] += coef;
    }
}

fn standardize(m: &Matrix) -> Matrix {
    let (rows, cols) = m.shape();
    let mut out = m.clone();
    for j in 0..cols {
        let c = m.col(j);
        let mu = crate::numeric::mean(&c);
        let sd = crate::numeric::variance(&c).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        for i in 0..rows {
            out.as_mut_slice()[i * cols + j] = (c[i] - mu) / sd;
        }
    }
    out
}

fn concat(x: &[f64], y: &[f64], out: &mut [f64]) {
    out[..x.len()].copy_from_slice(x);
    out[x.len()..].copy_from_slice(y);
}

/// Donsker–Varadhan objective `mean T(x, y) − log mean exp T(x, y_π)` over
/// all samples for a fixed permutation `π`.
fn full_objective(net: &Critic, p: &[f64], xs: &Matrix, ys: &Matrix, perm: &[usize]) -> f64 {
    let m = xs.rows();
    let mut h = vec![0.0; net.hidden];
    let mut z = vec![0.0; net.input];
    let mut joint = 0.0;
    let mut marg = Vec::with_capacity(m);
    for i in 0..m {
        concat(xs.row(i), ys.row(i), &mut z);
        joint += net.forward(p, &z, &mut h);
        concat(xs.row(i), ys.row(perm[i]), &mut z);
        marg.push(net.forward(p, &z, &mut h));
    }
    joint / m as f64 - (log_sum_exp(&marg) - (m as f64).ln())
}

/// Neural lower bound on MI: train a critic `T` to maximize the
/// Donsker–Varadhan objective, pairing `x` with in-batch shuffled `y` for the
/// product of marginals. Reports the best moving average of the per-epoch
/// full-data objective.
pub fn mi_critic(pairs: &SamplePairs, cfg: &CriticConfig, rng: &RngStream) -> Result<MIEstimate> {
    let m = pairs.len();
    let b = cfg.batch_size;
    if b < 2 || m < 2 * b {
        return Err(Error::InvalidArgument(format!("critic needs m >= 2·batch with batch >= 2, got m = {m}, batch = {b}")));
    }
    if cfg.epochs == 0 || cfg.hidden == 0 || cfg.smoothing_window == 0 {
        return Err(Error::InvalidArgument("critic epochs, hidden width and window must be positive".into()));
    }
    let xs = standardize(&pairs.xs);
    let ys = standardize(&pairs.ys);
    let net = Critic { input: xs.cols() + ys.cols(), hidden: cfg.hidden };
    let base = rng.child(purpose::CRITIC);
    let mut p = net.init(&base.child(0));
    let mut eval_perm: Vec<usize> = (0..m).collect();
    eval_perm.shuffle(&mut base.child(1).rng());
    let mut opt = Adam::new(p.len(), cfg.lr);
    let mut grad = vec![0.0; p.len()];
    let mut hs = vec![vec![0.0; net.hidden]; 2 * b];
    let mut zs = vec![vec![0.0; net.input]; 2 * b];
    let mut t_marg = vec![0.0; b];
    let mut w_marg = vec![0.0; b];
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut order: Vec<usize> = (0..m).collect();
    for epoch in 0..cfg.epochs {
        let mut r = base.derive(&[2, epoch as u64]).rng();
        order.shuffle(&mut r);
        for batch in order.chunks_exact(b) {
            let mut shuffled = batch.to_vec();
            shuffled.shuffle(&mut r);
            for (r_i, &i) in batch.iter().enumerate() {
                concat(xs.row(i), ys.row(i), &mut zs[r_i]);
                net.forward(&p, &zs[r_i], &mut hs[r_i]);
                concat(xs.row(i), ys.row(shuffled[r_i]), &mut zs[b + r_i]);
                t_marg[r_i] = net.forward(&p, &zs[b + r_i], &mut hs[b + r_i]);
            }
            softmax_into(&t_marg, &mut w_marg);
            grad.iter_mut().for_each(|g| *g = 0.0);
            // Loss is −DV: joint rows pull with −1/b, marginal rows push with softmax weights.
            for r_i in 0..b {
                net.backward(&p, &zs[r_i], &hs[r_i], -1.0 / b as f64, &mut grad);
                net.backward(&p, &zs[b + r_i], &hs[b + r_i], w_marg[r_i], &mut grad);
            }
            opt.step(&mut p, &grad);
        }
        let obj = full_objective(&net, &p, &xs, &ys, &eval_perm);
        if !obj.is_finite() {
            return Err(Error::CriticDiverged { epoch });
        }
        curve.push(obj);
    }
    let w = cfg.smoothing_window.min(curve.len());
    let mut best = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut acc: f64 = curve[..w].iter().sum();
    for e in (w - 1)..curve.len() {
        if e >= w {
            acc += curve[e] - curve[e - w];
        }
        if acc / w as f64 > best {
            best = acc / w as f64;
            best_epoch = e;
        }
    }
    let diagnostics = Diagnostics { curve, best_epoch: Some(best_epoch) };
    Ok(MIEstimate::new(best, Estimator::Critic(cfg.clone()), m, diagnostics))
}
