//! Experiment configuration: per-experiment defaults, file loading and
//! `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use slicegen_core::mi::{CriticConfig, Estimator};
use slicegen_core::models::OptimizerKind;
use slicegen_core::Family;

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Subspace Gaussian mean estimation against the closed-form bound.
    Gme,
    /// Fixed-design least squares in a random subspace.
    Linreg,
    /// Logistic regression on the two-Gaussian task with estimated information.
    Logistic,
    /// Quantized subspace MLP with the bit-count bound.
    QuantizedNn,
    /// Soft-subspace MLP with the quantized rate-distortion bound.
    RateDistortionNn,
    /// One trained model quantized at several codebook sizes.
    QuantLevelSweep,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Gme,
        ExperimentKind::Linreg,
        ExperimentKind::Logistic,
        ExperimentKind::QuantizedNn,
        ExperimentKind::RateDistortionNn,
        ExperimentKind::QuantLevelSweep,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ExperimentKind::Gme => "gme",
            ExperimentKind::Linreg => "linreg",
            ExperimentKind::Logistic => "logistic",
            ExperimentKind::QuantizedNn => "quantized_nn",
            ExperimentKind::RateDistortionNn => "rate_distortion_nn",
            ExperimentKind::QuantLevelSweep => "quant_level_sweep",
        }
    }

    /// Stream id of the root random stream, distinct per experiment.
    pub(crate) fn root_stream(self) -> u64 {
        match self {
            ExperimentKind::Gme => 101,
            ExperimentKind::Linreg => 102,
            ExperimentKind::Logistic => 103,
            ExperimentKind::QuantizedNn => 104,
            ExperimentKind::RateDistortionNn => 105,
            ExperimentKind::QuantLevelSweep => 106,
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| HarnessError::config(format!("unknown experiment {s:?}")))
    }
}

/// Sweep axes. The λ and codebook-size axes may be empty for experiments
/// that do not use them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub d: Vec<usize>,
    pub n: Vec<usize>,
    #[serde(default)]
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub levels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Standard Gaussian samples or design rows generated in place.
    Gaussian,
    /// The two-class Gaussian task in `features` dimensions.
    TwoGaussians { features: usize },
    /// An MNIST image/label pair in IDX format (optionally gzipped).
    Mnist {
        images: PathBuf,
        labels: PathBuf,
        /// Rescale feature vectors to at most this norm.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
        /// Held-out items per run; all items not used for training when unset.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        test_size: Option<usize>,
    },
}

/// Problem and training settings. Fields an experiment does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSettings {
    /// Ambient dimension `D` of the Gaussian mean and least-squares problems.
    pub ambient: usize,
    /// Label noise of the least-squares problem.
    pub noise_sigma: f64,
    /// Ridge of the Newton solve for logistic regression.
    pub ridge: f64,
    pub newton_iters: usize,
    /// Hidden widths of the MLP; input and output widths come from the data.
    pub hidden: Vec<usize>,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub complement_lr_ratio: f64,
    pub batch_size: usize,
    pub epochs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral_cap: Option<f64>,
    /// Probability floor of the clamped cross-entropy.
    pub p_min: f64,
}

impl Default for ModelSettings {
    fn default() -> Self {
        Self {
            ambient: 15,
            noise_sigma: 1.0,
            ridge: 1e-4,
            newton_iters: 100,
            hidden: vec![100, 100],
            optimizer: OptimizerKind::Adam,
            lr: 0.01,
            complement_lr_ratio: 0.1,
            batch_size: 128,
            epochs: 10,
            spectral_cap: None,
            p_min: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub family: Family,
    pub n_theta: usize,
    pub n_runs: usize,
    pub grid: Grid,
    pub estimator: Estimator,
    pub data: DataSource,
    pub model: ModelSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

pub const MNIST_IMAGES: &str = "data/mnist-5k/images-idx3-ubyte.gz";
pub const MNIST_LABELS: &str = "data/mnist-5k/labels-idx1-ubyte.gz";

fn mnist(radius: Option<f64>) -> DataSource {
    DataSource::Mnist { images: MNIST_IMAGES.into(), labels: MNIST_LABELS.into(), radius, test_size: None }
}

impl ExperimentConfig {
    /// Desk-scale defaults for each experiment.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let base = ModelSettings::default();
        match kind {
            ExperimentKind::Gme => Self {
                experiment: kind,
                seed: 0,
                family: Family::Dense,
                n_theta: 30,
                n_runs: 500,
                grid: Grid { d: vec![1, 5, 10, 15], n: vec![10, 22, 46, 100, 215, 464, 1000], lambda: vec![], levels: vec![] },
                estimator: Estimator::ClosedFormGaussian,
                data: DataSource::Gaussian,
                model: ModelSettings { ambient: 15, ..base },
                output_dir: None,
            },
            ExperimentKind::Linreg => Self {
                experiment: kind,
                seed: 0,
                family: Family::Dense,
                n_theta: 20,
                n_runs: 200,
                grid: Grid { d: vec![2, 5, 10], n: vec![20, 100], lambda: vec![], levels: vec![] },
                estimator: Estimator::ClosedFormGaussian,
                data: DataSource::Gaussian,
                model: ModelSettings { ambient: 10, noise_sigma: 1.0, ..base },
                output_dir: None,
            },
            ExperimentKind::Logistic => Self {
                experiment: kind,
                seed: 0,
                family: Family::Dense,
                n_theta: 30,
                n_runs: 30,
                grid: Grid { d: vec![2, 5, 10, 21], n: vec![100, 500, 2000], lambda: vec![], levels: vec![] },
                estimator: Estimator::Critic(CriticConfig { batch_size: 15, ..CriticConfig::default() }),
                data: DataSource::TwoGaussians { features: 20 },
                model: ModelSettings { ridge: 1e-4, newton_iters: 100, ..base },
                output_dir: None,
            },
            ExperimentKind::QuantizedNn => Self {
                experiment: kind,
                seed: 0,
                family: Family::Kronecker,
                n_theta: 3,
                n_runs: 1,
                grid: Grid { d: vec![250, 1000, 4000], n: vec![4000], lambda: vec![], levels: vec![2] },
                estimator: Estimator::ClosedFormGaussian,
                data: mnist(None),
                model: ModelSettings { hidden: vec![200, 200], lr: 0.01, batch_size: 128, epochs: 30, ..base },
                output_dir: None,
            },
            ExperimentKind::RateDistortionNn => Self {
                experiment: kind,
                seed: 0,
                family: Family::Kronecker,
                n_theta: 5,
                n_runs: 5,
                grid: Grid { d: vec![100, 1000], n: vec![1000], lambda: vec![0.0, 1.0, 10.0], levels: vec![] },
                estimator: Estimator::ClosedFormGaussian,
                data: mnist(Some(10.0)),
                model: ModelSettings {
                    hidden: vec![100, 100],
                    lr: 0.01,
                    complement_lr_ratio: 0.1,
                    batch_size: 256,
                    epochs: 20,
                    spectral_cap: Some(3.0),
                    p_min: 1e-4,
                    ..base
                },
                output_dir: None,
            },
            ExperimentKind::QuantLevelSweep => Self {
                experiment: kind,
                seed: 0,
                family: Family::Kronecker,
                n_theta: 1,
                n_runs: 1,
                grid: Grid { d: vec![1000], n: vec![4000], lambda: vec![], levels: vec![2, 4, 8, 16] },
                estimator: Estimator::ClosedFormGaussian,
                data: mnist(None),
                model: ModelSettings { hidden: vec![100, 100], epochs: 10, ..base },
                output_dir: None,
            },
        }
    }

    /// Parse a TOML or JSON document (JSON when the text starts with `{`),
    /// fill unset fields from the defaults of its `experiment`, then apply
    /// `key.path=value` overrides.
    pub fn from_str_with_overrides(text: &str, overrides: &[String]) -> Result<Self> {
        let user: toml::Table = if text.trim_start().starts_with('{') {
            let v: serde_json::Value = serde_json::from_str(text)?;
            toml::Table::deserialize(v).map_err(|e| HarnessError::config(e.to_string()))?
        } else {
            text.parse::<toml::Table>().map_err(|e| HarnessError::config(e.to_string()))?
        };
        Self::from_table(user, overrides)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_str_with_overrides(&text, overrides)
    }

    /// Defaults for `kind` with overrides applied.
    pub fn defaults_with_overrides(kind: ExperimentKind, overrides: &[String]) -> Result<Self> {
        let mut t = toml::Table::new();
        t.insert("experiment".into(), toml::Value::String(kind.tag().into()));
        Self::from_table(t, overrides)
    }

    fn from_table(mut user: toml::Table, overrides: &[String]) -> Result<Self> {
        for o in overrides {
            apply_override(&mut user, o)?;
        }
        let kind: ExperimentKind = match user.get("experiment") {
            Some(toml::Value::String(s)) => s.parse()?,
            Some(other) => return Err(HarnessError::config(format!("experiment must be a string, got {other}"))),
            None => return Err(HarnessError::config("missing `experiment`")),
        };
        let mut base = match toml::Value::try_from(Self::defaults(kind)).map_err(|e| HarnessError::config(e.to_string()))? {
            toml::Value::Table(t) => t,
            _ => unreachable!("a struct serializes to a table"),
        };
        // A different tagged variant replaces the default instead of merging into it.
        for tagged in [("estimator", "method"), ("data", "source")] {
            if let (Some(toml::Value::Table(u)), Some(toml::Value::Table(b))) = (user.get(tagged.0), base.get(tagged.0)) {
                if u.get(tagged.1).is_some_and(|m| Some(m) != b.get(tagged.1)) {
                    base.remove(tagged.0);
                }
            }
        }
        merge(&mut base, user);
        let cfg: Self = toml::Value::Table(base).try_into().map_err(|e: toml::de::Error| HarnessError::config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.d.is_empty() || g.n.is_empty() {
            return Err(HarnessError::config("grid.d and grid.n must be nonempty"));
        }
        if self.n_theta == 0 || self.n_runs == 0 {
            return Err(HarnessError::config("n_theta and n_runs must be positive"));
        }
        if g.d.contains(&0) {
            return Err(HarnessError::config("grid.d entries must be positive"));
        }
        if g.lambda.iter().any(|l| !(*l >= 0.0)) {
            return Err(HarnessError::config("grid.lambda entries must be nonnegative"));
        }
        let m = &self.model;
        match self.experiment {
            ExperimentKind::Gme | ExperimentKind::Linreg => {
                if let Some(d) = g.d.iter().find(|d| **d > m.ambient) {
                    return Err(HarnessError::config(format!("d = {d} exceeds model.ambient = {}", m.ambient)));
                }
                if self.experiment == ExperimentKind::Linreg && g.n.iter().any(|n| *n < m.ambient) {
                    return Err(HarnessError::config("least squares needs n >= model.ambient"));
                }
                if self.experiment == ExperimentKind::Gme && g.n.iter().any(|n| *n < 2) {
                    return Err(HarnessError::config("Gaussian mean estimation needs n >= 2"));
                }
            }
            ExperimentKind::Logistic => {
                let DataSource::TwoGaussians { features } = self.data else {
                    return Err(HarnessError::config("logistic experiment needs data.source = \"two_gaussians\""));
                };
                if let Some(d) = g.d.iter().find(|d| **d > features + 1) {
                    return Err(HarnessError::config(format!("d = {d} exceeds features + 1 = {}", features + 1)));
                }
                if let Estimator::Critic(c) = &self.estimator {
                    if self.n_runs < 2 * c.batch_size {
                        return Err(HarnessError::config(format!(
                            "critic needs n_runs >= 2 x estimator.batch_size ({} < {})",
                            self.n_runs,
                            2 * c.batch_size
                        )));
                    }
                }
                if let Estimator::Ksg { k } = &self.estimator {
                    if self.n_runs <= *k {
                        return Err(HarnessError::config("KSG needs n_runs > k"));
                    }
                }
            }
            ExperimentKind::QuantizedNn | ExperimentKind::RateDistortionNn | ExperimentKind::QuantLevelSweep => {
                if !matches!(self.data, DataSource::Mnist { .. }) {
                    return Err(HarnessError::config("network experiments need data.source = \"mnist\""));
                }
                if m.batch_size == 0 || m.hidden.contains(&0) {
                    return Err(HarnessError::config("batch size and hidden widths must be positive"));
                }
                if self.experiment != ExperimentKind::RateDistortionNn && (g.levels.is_empty() || g.levels.contains(&0)) {
                    return Err(HarnessError::config("grid.levels must be nonempty and positive"));
                }
                if self.experiment == ExperimentKind::RateDistortionNn {
                    if g.lambda.is_empty() {
                        return Err(HarnessError::config("grid.lambda must be nonempty"));
                    }
                    if m.spectral_cap.is_none() {
                        return Err(HarnessError::config("the rate-distortion bound needs model.spectral_cap"));
                    }
                    if !matches!(self.data, DataSource::Mnist { radius: Some(_), .. }) {
                        return Err(HarnessError::config("the rate-distortion bound needs data.radius"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| HarnessError::config(e.to_string()))
    }
}

fn merge(base: &mut toml::Table, user: toml::Table) {
    for (k, v) in user {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => merge(b, u),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parse the right-hand side of `key=value` as a TOML value, falling back to
/// a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v was just parsed"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Apply one `a.b.c=value` override, creating intermediate tables.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| HarnessError::config(format!("override {spec:?} is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(HarnessError::config(format!("override {spec:?} has an empty key")));
    }
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        let entry = cur.entry(k.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(HarnessError::config(format!("override {spec:?}: {k} is not a table"))),
        };
    }
    cur.insert(keys[keys.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}
