//! Experiment sweeps on top of `slicegen-core`: configuration, data
//! ingestion, run records with CSV tables, and SVG figures.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
pub mod error;
mod experiments;
pub mod figures;
pub mod record;
pub mod run;

pub use config::{DataSource, ExperimentConfig, ExperimentKind, Grid, ModelSettings};
pub use data::{gen_two_gaussian_classification, load_mnist_idx, Split};
pub use error::{HarnessError, Result};
pub use figures::{emit_figures, FigureOutput};
pub use record::{CellRecord, GridPoint, PointRecord, PointStatus, RunRecord};
pub use run::{run_experiment, RunOptions};
