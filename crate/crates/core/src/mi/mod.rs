//! Mutual information in nats: closed-form Gaussian values, the KSG
//! nearest-neighbour estimator, and a Donsker–Varadhan critic.

mod critic;
mod gaussian;
mod ksg;
mod sliced;

use serde::{Deserialize, Serialize};

use crate::error::{dim_check, Result};
use crate::numeric::Matrix;

pub use critic::{mi_critic, CriticConfig};
pub use gaussian::{gme_sliced_mi, gme_slice_covariance, mi_gaussian_closed_form, mi_gaussian_from_samples};
pub use ksg::mi_ksg;
pub use sliced::{sliced_mi, sliced_mi_gaussian, SlicedMi};

/// How an estimate was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum Estimator {
    ClosedFormGaussian,
    Ksg { k: usize },
    Critic(CriticConfig),
}

impl Estimator {
    pub fn label(&self) -> String {
        match self {
            Estimator::ClosedFormGaussian => "closed_form_gaussian".into(),
            Estimator::Ksg { k } => format!("ksg(k={k})"),
            Estimator::Critic(c) => format!("critic(epochs={},batch={})", c.epochs, c.batch_size),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Full-data DV objective after each critic epoch.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub curve: Vec<f64>,
    /// Last epoch of the best smoothing window.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub best_epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MIEstimate {
    /// Nats, never negative.
    pub value: f64,
    /// Value before clamping at zero.
    pub raw: f64,
    pub method: Estimator,
    pub n_samples: usize,
    pub clamped: bool,
    /// Set when the estimate exceeds `log(m)/2`, a sign that the coupling is
    /// close to deterministic and the number is mostly sample-size driven.
    pub near_deterministic: bool,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

impl MIEstimate {
    pub(crate) fn new(raw: f64, method: Estimator, n_samples: usize, diagnostics: Diagnostics) -> Self {
        let clamped = raw < 0.0;
        let value = raw.max(0.0);
        let near_deterministic = n_samples > 1 && value > (n_samples as f64).ln() / 2.0;
        Self { value, raw, method, n_samples, clamped, near_deterministic, diagnostics }
    }
}

/// Paired samples: row `i` of `xs` goes with row `i` of `ys`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePairs {
    pub xs: Matrix,
    pub ys: Matrix,
}

impl SamplePairs {
    pub fn new(xs: Matrix, ys: Matrix) -> Result<Self> {
        dim_check("paired sample counts", xs.rows(), ys.rows())?;
        Ok(Self { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.xs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.rows() == 0
    }
}

/// Run `estimator` on `pairs`. The closed form fits a Gaussian to the samples.
pub fn estimate(pairs: &SamplePairs, estimator: &Estimator, rng: &crate::numeric::RngStream) -> Result<MIEstimate> {
    match estimator {
        Estimator::ClosedFormGaussian => mi_gaussian_from_samples(pairs),
        Estimator::Ksg { k } => mi_ksg(pairs, *k, rng),
        Estimator::Critic(cfg) => mi_critic(pairs, cfg, rng),
    }
}
