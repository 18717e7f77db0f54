//! One driver per experiment kind. Each evaluates a single grid point.

mod gme;
mod linreg;
mod logistic;
mod networks;

use std::collections::BTreeMap;
use std::sync::Mutex;

use slicegen_core::bounds::BoundReport;
use slicegen_core::models::{Dataset, LossSpec, TrainConfig};
use slicegen_core::numeric::{RngStream, Summary};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;
use crate::record::{CellRecord, GridPoint};

/// Everything a point needs besides its coordinates.
pub(crate) struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub root: RngStream,
    /// Loaded data pool for the network experiments.
    pub pool: Option<Dataset>,
    /// Trained latent vectors shared between points that differ only in the
    /// codebook size, keyed by `(d, n, run, theta)`.
    pub latents: Mutex<BTreeMap<(usize, usize, usize, usize), Vec<f64>>>,
}

impl Context<'_> {
    pub fn train_config(&self) -> TrainConfig {
        let m = &self.cfg.model;
        TrainConfig {
            optimizer: m.optimizer,
            lr: m.lr,
            complement_lr_ratio: m.complement_lr_ratio,
            batch_size: m.batch_size,
            epochs: m.epochs,
            spectral_cap: m.spectral_cap,
        }
    }

    pub fn loss(&self) -> LossSpec {
        LossSpec::clamped_ce(self.cfg.model.p_min)
    }
}

/// What a driver returns for one grid point.
#[derive(Debug, Default)]
pub(crate) struct Outcome {
    pub big_d: usize,
    pub report: Option<BoundReport>,
    pub metrics: BTreeMap<String, f64>,
    pub bands: BTreeMap<String, Summary>,
    pub cells: Vec<CellRecord>,
}

impl Outcome {
    fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_string(), v);
    }

    fn band(&mut self, key: &str, values: &[f64]) {
        self.bands.insert(key.to_string(), Summary::of(values));
    }

    /// Band every named cell value over all cells.
    fn band_cells(&mut self, keys: &[&str]) {
        for key in keys {
            let values: Vec<f64> = self.cells.iter().filter_map(|c| c.values.get(*key).copied()).collect();
            if !values.is_empty() {
                self.band(key, &values);
            }
        }
    }
}

pub(crate) fn cell(run: usize, theta: usize, values: &[(&str, f64)]) -> CellRecord {
    CellRecord { run, theta, values: values.iter().map(|(k, v)| (k.to_string(), *v)).collect() }
}

pub(crate) fn run_point(ctx: &Context<'_>, point: &GridPoint) -> Result<Outcome> {
    match ctx.cfg.experiment {
        ExperimentKind::Gme => gme::run(ctx, point),
        ExperimentKind::Linreg => linreg::run(ctx, point),
        ExperimentKind::Logistic => logistic::run(ctx, point),
        ExperimentKind::QuantizedNn => networks::run_quantized(ctx, point),
        ExperimentKind::RateDistortionNn => networks::run_rate_distortion(ctx, point),
        ExperimentKind::QuantLevelSweep => networks::run_level_sweep(ctx, point),
    }
}
