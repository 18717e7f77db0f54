use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::data::Dataset;
use super::loss::{argmax, LossSpec};
use crate::error::{dim_check, Result};
use crate::numeric::{gemm, Matrix, RngStream};

/// A classifier whose parameters form one flat ambient vector.
pub trait Network: Send + Sync {
    fn num_params(&self) -> usize;
    fn num_inputs(&self) -> usize;
    fn num_classes(&self) -> usize;
    /// `(rows, cols)` of each weight block in flattening order, row-major.
    fn layer_shapes(&self) -> Vec<(usize, usize)>;
    /// Logits for every row of `x`.
    fn logits(&self, w: &[f64], x: &Matrix) -> Result<Matrix>;
    /// Mean loss over the batch; the mean gradient is written to `grad`.
    fn loss_grad(&self, w: &[f64], x: &Matrix, y: &[usize], loss: &LossSpec, grad: &mut [f64]) -> Result<f64>;
    /// Fan-in scaled Gaussian initialization.
    fn init(&self, rng: &RngStream) -> Vec<f64>;
}

/// Bias-free feedforward ReLU network; the last layer is linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// `[inputs, hidden…, classes]`
    pub widths: Vec<usize>,
}

impl Mlp {
    pub fn new(widths: Vec<usize>) -> Self {
        assert!(widths.len() >= 2 && widths.iter().all(|w| *w > 0), "need at least input and output widths");
        Self { widths }
    }

    fn offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for w in self.widths.windows(2) {
            off.push(off.last().unwrap() + w[0] * w[1]);
        }
        off
    }

    /// Hidden activations for every layer (the input is layer 0, logits last).
    pub fn forward_all(&self, w: &[f64], x: &Matrix) -> Result<Vec<Matrix>> {
        dim_check("mlp params", self.num_params(), w.len())?;
        dim_check("mlp inputs", self.widths[0], x.cols())?;
        let off = self.offsets();
        let b = x.rows();
        let mut acts = vec![x.clone()];
        let layers = self.widths.len() - 1;
        for l in 0..layers {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            let mut z = Matrix::zeros(b, fan_out);
            gemm(false, true, b, fan_out, fan_in, 1.0, acts[l].as_slice(), &w[off[l]..off[l + 1]], 0.0, z.as_mut_slice());
            if l + 1 < layers {
                z.as_mut_slice().iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        Ok(acts)
    }
}

impl Network for Mlp {
    fn num_params(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1]).sum()
    }

    fn num_inputs(&self) -> usize {
        self.widths[0]
    }

    fn num_classes(&self) -> usize {
        *self.widths.last().unwrap()
    }

    fn layer_shapes(&self) -> Vec<(usize, usize)> {
        self.widths.windows(2).map(|w| (w[1], w[0])).collect()
    }

    fn logits(&self, w: &[f64], x: &Matrix) -> Result<Matrix> {
        Ok(self.forward_all(w, x)?.pop().unwrap())
    }

    fn loss_grad(&self, w: &[f64], x: &Matrix, y: &[usize], loss: &LossSpec, grad: &mut [f64]) -> Result<f64> {
        dim_check("mlp grad", self.num_params(), grad.len())?;
        dim_check("mlp labels", x.rows(), y.len())?;
        let acts = self.forward_all(w, x)?;
        let off = self.offsets();
        let b = x.rows();
        let k = self.num_classes();
        let logits = acts.last().unwrap();
        let mut g = Matrix::zeros(b, k);
        let mut total = 0.0;
        for i in 0..b {
            total += loss.value_and_grad(logits.row(i), y[i], g.row_mut(i))?;
        }
        g.scale(1.0 / b as f64);
        let layers = self.widths.len() - 1;
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (self.widths[l], self.widths[l + 1]);
            gemm(true, false, fan_out, fan_in, b, 1.0, g.as_slice(), acts[l].as_slice(), 0.0, &mut grad[off[l]..off[l + 1]]);
            if l > 0 {
                let mut prev = Matrix::zeros(b, fan_in);
                gemm(false, false, b, fan_in, fan_out, 1.0, g.as_slice(), &w[off[l]..off[l + 1]], 0.0, prev.as_mut_slice());
                // ReLU derivative, taken as 0 at the kink.
                for (p, a) in prev.as_mut_slice().iter_mut().zip(acts[l].as_slice()) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                g = prev;
            }
        }
        Ok(total / b as f64)
    }

    fn init(&self, rng: &RngStream) -> Vec<f64> {
        let mut r = rng.rng();
        let mut w = Vec::with_capacity(self.num_params());
        for pair in self.widths.windows(2) {
            let dist = Normal::new(0.0, (2.0 / pair[0] as f64).sqrt()).expect("positive std");
            w.extend((0..pair[0] * pair[1]).map(|_| dist.sample(&mut r)));
        }
        w
    }
}

/// Logistic-regression style binary classifier with logits `[0, w̄ᵀx + w₀]`.
/// Parameters are `(w̄, w₀)`, so `D = s + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearBinary {
    pub features: usize,
}

impl LinearBinary {
    pub fn score(&self, w: &[f64], x: &[f64]) -> f64 {
        crate::numeric::dot(&w[..self.features], x) + w[self.features]
    }
}

impl Network for LinearBinary {
    fn num_params(&self) -> usize {
        self.features + 1
    }

    fn num_inputs(&self) -> usize {
        self.features
    }

    fn num_classes(&self) -> usize {
        2
    }

    fn layer_shapes(&self) -> Vec<(usize, usize)> {
        vec![(1, self.features + 1)]
    }

    fn logits(&self, w: &[f64], x: &Matrix) -> Result<Matrix> {
        dim_check("linear params", self.num_params(), w.len())?;
        dim_check("linear inputs", self.features, x.cols())?;
        Ok(Matrix::from_fn(x.rows(), 2, |i, j| if j == 0 { 0.0 } else { self.score(w, x.row(i)) }))
    }

    fn loss_grad(&self, w: &[f64], x: &Matrix, y: &[usize], loss: &LossSpec, grad: &mut [f64]) -> Result<f64> {
        dim_check("linear grad", self.num_params(), grad.len())?;
        let logits = self.logits(w, x)?;
        grad.iter_mut().for_each(|g| *g = 0.0);
        let b = x.rows() as f64;
        let mut total = 0.0;
        let mut gl = [0.0; 2];
        for i in 0..x.rows() {
            total += loss.value_and_grad(logits.row(i), y[i], &mut gl)?;
            let gf = gl[1] / b;
            crate::numeric::axpy(gf, x.row(i), &mut grad[..self.features]);
            grad[self.features] += gf;
        }
        Ok(total / b)
    }

    fn init(&self, rng: &RngStream) -> Vec<f64> {
        let mut r = rng.rng();
        let dist = Normal::new(0.0, (1.0 / self.num_params() as f64).sqrt()).expect("positive std");
        (0..self.num_params()).map(|_| dist.sample(&mut r)).collect()
    }
}

const EVAL_CHUNK: usize = 1024;

/// Mean loss of weights `w` over the whole dataset.
pub fn evaluate_risk<N: Network + ?Sized>(net: &N, w: &[f64], data: &Dataset, loss: &LossSpec) -> Result<f64> {
    let y = data.class_labels()?;
    let mut total = 0.0;
    for start in (0..data.len()).step_by(EVAL_CHUNK) {
        let idx: Vec<usize> = (start..(start + EVAL_CHUNK).min(data.len())).collect();
        let logits = net.logits(w, &data.features.select_rows(&idx))?;
        total += idx.iter().enumerate().map(|(r, &i)| loss.value(logits.row(r), y[i])).sum::<f64>();
    }
    Ok(total / data.len() as f64)
}

/// Fraction of correctly classified samples.
pub fn accuracy<N: Network + ?Sized>(net: &N, w: &[f64], data: &Dataset) -> Result<f64> {
    let y = data.class_labels()?;
    let mut correct = 0usize;
    for start in (0..data.len()).step_by(EVAL_CHUNK) {
        let idx: Vec<usize> = (start..(start + EVAL_CHUNK).min(data.len())).collect();
        let logits = net.logits(w, &data.features.select_rows(&idx))?;
        correct += idx.iter().enumerate().filter(|(r, &i)| argmax(logits.row(*r)) == y[i]).count();
    }
    Ok(correct as f64 / data.len() as f64)
}
