use serde::{Deserialize, Serialize};

use crate::mi::SlicedMi;
use crate::numeric::Summary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundFamily {
    Disintegrated,
    IndividualSample,
    Countable,
    Gme,
    LinReg,
    RateDistortion,
    QuantizedRateDistortion,
    GenericCgf,
}

impl BoundFamily {
    pub fn tag(self) -> &'static str {
        match self {
            BoundFamily::Disintegrated => "disintegrated",
            BoundFamily::IndividualSample => "individual_sample",
            BoundFamily::Countable => "countable",
            BoundFamily::Gme => "gme",
            BoundFamily::LinReg => "linreg",
            BoundFamily::RateDistortion => "rate_distortion",
            BoundFamily::QuantizedRateDistortion => "quantized_rate_distortion",
            BoundFamily::GenericCgf => "generic_cgf",
        }
    }
}

/// Constants entering a bound. Unused ones stay `None`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub sigma: Option<f64>,
    pub c: Option<f64>,
    pub lipschitz: Option<f64>,
    pub m: Option<f64>,
    pub delta: Option<f64>,
    pub b_theta: Option<f64>,
    pub d: usize,
    #[serde(rename = "D")]
    pub big_d: usize,
    pub n: usize,
    pub lambda: Option<f64>,
}

/// Where the information terms came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiSource {
    pub method: String,
    /// Samples behind each estimate; zero for exact values.
    pub n_samples: usize,
    /// Some estimate signalled a near-deterministic coupling.
    pub near_deterministic: bool,
}

impl MiSource {
    pub fn exact(label: &str) -> Self {
        Self { method: label.to_string(), n_samples: 0, near_deterministic: false }
    }

    pub fn bits() -> Self {
        Self::exact("bit_bound")
    }

    pub fn from_sliced(s: &SlicedMi) -> Self {
        let first = s.per_theta.first();
        Self {
            method: first.map(|e| e.method.label()).unwrap_or_default(),
            n_samples: first.map(|e| e.n_samples).unwrap_or(0),
            near_deterministic: s.any_near_deterministic(),
        }
    }
}

/// Mean of `test risk − train risk` over independent runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenErrorEstimate {
    pub summary: Summary,
    /// Exact value when the problem has one.
    pub exact: Option<f64>,
}

impl GenErrorEstimate {
    pub fn from_runs(gaps: &[f64]) -> Self {
        Self { summary: Summary::of(gaps), exact: None }
    }

    pub fn exact(value: f64) -> Self {
        Self { summary: Summary { mean: value, lo: value, hi: value, stderr: 0.0, count: 0 }, exact: Some(value) }
    }
}

/// Distortion and rate parts of a rate-distortion bound, per projector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateDistortionTerms {
    /// `2L·ρ` (plus `2Lδ` for the quantized variant).
    pub distortion: Vec<f64>,
    pub rate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub family: BoundFamily,
    /// Bound evaluated for each projector draw; the bound is their mean.
    pub per_theta: Vec<f64>,
    pub summary: Summary,
    pub constants: BoundConstants,
    pub mi: Option<MiSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<RateDistortionTerms>,
    pub gen_error: Option<GenErrorEstimate>,
    /// Whether the bound dominates `|gen_error|`; unset without an error estimate.
    pub holds: Option<bool>,
    /// The information inputs were flagged near-deterministic, so the value
    /// says little even if it is finite.
    pub vacuous: bool,
}

impl BoundReport {
    pub fn new(family: BoundFamily, per_theta: Vec<f64>, constants: BoundConstants, mi: Option<MiSource>) -> Self {
        let vacuous = mi.as_ref().is_some_and(|m| m.near_deterministic) || per_theta.iter().any(|v| v.is_infinite());
        Self { family, summary: Summary::of(&per_theta), per_theta, constants, mi, terms: None, gen_error: None, holds: None, vacuous }
    }

    pub fn value(&self) -> f64 {
        self.summary.mean
    }

    /// Attach an error estimate and decide whether the bound holds.
    pub fn with_gen_error(mut self, g: GenErrorEstimate) -> Self {
        self.holds = Some(self.value() >= g.summary.mean.abs());
        self.gen_error = Some(g);
        self
    }
}
