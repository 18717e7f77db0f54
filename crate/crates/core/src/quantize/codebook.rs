use half::f16;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::percentile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// Levels are rounded through IEEE half precision, nearest-even.
    Half,
    /// Levels keep full f64 precision.
    Full,
}

impl Precision {
    pub fn round(self, x: f64) -> f64 {
        match self {
            Precision::Half => f16::from_f64(x).to_f64(),
            Precision::Full => x,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct CodebookRepr {
    precision: Precision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels_f16: Option<Vec<u16>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<f64>>,
}

/// Sorted, pairwise distinct quantization levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "CodebookRepr", try_from = "CodebookRepr")]
pub struct Codebook {
    levels: Vec<f64>,
    precision: Precision,
}

impl From<Codebook> for CodebookRepr {
    fn from(c: Codebook) -> Self {
        match c.precision {
            Precision::Half => CodebookRepr {
                precision: c.precision,
                levels_f16: Some(c.levels.iter().map(|&v| f16::from_f64(v).to_bits()).collect()),
                levels: None,
            },
            Precision::Full => CodebookRepr { precision: c.precision, levels_f16: None, levels: Some(c.levels) },
        }
    }
}

impl TryFrom<CodebookRepr> for Codebook {
    type Error = Error;

    fn try_from(r: CodebookRepr) -> Result<Self> {
        let levels = match (r.levels_f16, r.levels) {
            (Some(bits), None) => bits.into_iter().map(|b| f16::from_bits(b).to_f64()).collect(),
            (None, Some(l)) => l,
            _ => return Err(Error::InvalidArgument("codebook needs exactly one of levels_f16 or levels".into())),
        };
        Codebook::new(levels, r.precision)
    }
}

impl Codebook {
    /// Round, sort and deduplicate `levels`.
    pub fn new(levels: Vec<f64>, precision: Precision) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::EmptyCodebook);
        }
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("codebook levels must be finite".into()));
        }
        let mut levels: Vec<f64> = levels.into_iter().map(|v| precision.round(v)).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        Ok(Self { levels, precision })
    }

    /// `L` levels at the `(k + ½)/L` quantiles of `w`.
    pub fn from_quantiles(w: &[f64], l: usize, precision: Precision) -> Result<Self> {
        if l == 0 || w.is_empty() {
            return Err(Error::EmptyCodebook);
        }
        let mut s = w.to_vec();
        s.sort_by(f64::total_cmp);
        let levels = (0..l).map(|k| percentile_sorted(&s, 100.0 * (k as f64 + 0.5) / l as f64)).collect();
        Self::new(levels, precision)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// Index of the closest level; a value exactly between two levels goes
    /// to the lower one.
    pub fn nearest(&self, x: f64) -> usize {
        let k = self.levels.partition_point(|&c| c < x);
        if k == 0 {
            return 0;
        }
        if k == self.levels.len() {
            return k - 1;
        }
        if x - self.levels[k - 1] <= self.levels[k] - x {
            k - 1
        } else {
            k
        }
    }

    /// Build from levels that are already rounded, sorted and distinct.
    pub(crate) fn from_raw(levels: Vec<f64>, precision: Precision) -> Self {
        Self { levels, precision }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantizedWeights {
    pub d: usize,
    pub codebook: Codebook,
    pub assignments: Vec<usize>,
    /// Fraction of weights assigned to each level.
    pub probabilities: Vec<f64>,
    pub bit_bound: u64,
    /// `max_i |w_i − c_{q(i)}|`.
    pub max_distortion: f64,
}

impl QuantizedWeights {
    pub fn values(&self) -> Vec<f64> {
        self.assignments.iter().map(|&k| self.codebook.levels[k]).collect()
    }

    pub fn levels(&self) -> usize {
        self.codebook.len()
    }

    /// The bit bound expressed in nats.
    pub fn nats(&self) -> f64 {
        self.bit_bound as f64 * std::f64::consts::LN_2
    }
}

/// Assign every weight to its nearest level.
pub fn quantize(w: &[f64], codebook: &Codebook) -> Result<QuantizedWeights> {
    if codebook.is_empty() {
        return Err(Error::EmptyCodebook);
    }
    if w.is_empty() {
        return Err(Error::InvalidArgument("nothing to quantize".into()));
    }
    let assignments: Vec<usize> = w.iter().map(|&x| codebook.nearest(x)).collect();
    let max_distortion = w.iter().zip(&assignments).fold(0.0f64, |m, (x, &k)| m.max((x - codebook.levels[k]).abs()));
    let mut counts = vec![0usize; codebook.len()];
    for &k in &assignments {
        counts[k] += 1;
    }
    let d = w.len();
    let probabilities: Vec<f64> = counts.iter().map(|&c| c as f64 / d as f64).collect();
    let entropy = entropy_bits_from_counts(&counts, d);
    Ok(QuantizedWeights {
        d,
        codebook: codebook.clone(),
        assignments,
        probabilities,
        bit_bound: bit_bound(d, codebook.len(), entropy),
        max_distortion,
    })
}

/// `H₂(p)` of the empirical level distribution, computed from integer counts
/// as `Σ (n_k/d) log₂(d/n_k)`.
fn entropy_bits_from_counts(counts: &[usize], d: usize) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| (c as f64 / d as f64) * (d as f64 / c as f64).log2())
        .sum()
}

/// `⌈log₂ d⌉` for `d ≥ 1`.
pub fn ceil_log2(d: usize) -> u64 {
    u64::from(d.max(1).next_power_of_two().trailing_zeros())
}

/// `⌈d·H₂⌉ + L·(16 + ⌈log₂ d⌉) + 2` bits. Products within `1e-9` (relative)
/// above an integer are snapped down so rounding noise in `H₂` cannot add a bit.
pub fn bit_bound(d: usize, levels: usize, entropy_bits: f64) -> u64 {
    let x = d as f64 * entropy_bits.max(0.0);
    let snapped = x.round();
    let payload = if (x - snapped).abs() <= 1e-9 * snapped.max(1.0) { snapped } else { x.ceil() };
    payload as u64 + levels as u64 * (16 + ceil_log2(d)) + 2
}

pub fn quantization_bound_bits(qw: &QuantizedWeights) -> u64 {
    qw.bit_bound
}
