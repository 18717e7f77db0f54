//! Sweep execution and persistence.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use slicegen_core::numeric::RngStream;
use slicegen_core::parallel::current_threads;

use crate::config::{DataSource, ExperimentConfig};
use crate::data::load_mnist_idx;
use crate::error::{HarnessError, Result};
use crate::experiments::{run_point, Context, Outcome};
use crate::record::{write_atomic, GridPoint, PointLog, PointRecord, PointStatus, RunRecord};

#[derive(Default)]
pub struct RunOptions {
    /// Directory for `points.jsonl`, `runrecord.json`, `results.csv` and
    /// `terms.csv`; falls back to `config.output_dir`, and nothing is written
    /// when both are unset.
    pub out_dir: Option<PathBuf>,
    /// Overrides already applied to the config, recorded verbatim.
    pub overrides: Vec<String>,
    /// Checked between grid points; when set the partial record is flushed.
    pub cancel: Option<Arc<AtomicBool>>,
    /// Called with one line per finished point.
    pub progress: Option<Box<dyn Fn(&str) + Send + Sync>>,
}

/// Grid points in axis order `d`, `n`, `λ`, `L`; unused axes contribute a
/// single unset value.
pub fn grid_points(cfg: &ExperimentConfig) -> Vec<GridPoint> {
    let g = &cfg.grid;
    let lambdas: Vec<Option<f64>> = if g.lambda.is_empty() { vec![None] } else { g.lambda.iter().copied().map(Some).collect() };
    let levels: Vec<Option<usize>> = if g.levels.is_empty() { vec![None] } else { g.levels.iter().copied().map(Some).collect() };
    let mut out = Vec::new();
    for &d in &g.d {
        for &n in &g.n {
            for &lambda in &lambdas {
                for &l in &levels {
                    out.push(GridPoint { d, n, lambda, levels: l });
                }
            }
        }
    }
    out
}

/// Load the data pool the config refers to, if any. Relative paths resolve
/// against the working directory.
pub fn load_pool(cfg: &ExperimentConfig) -> Result<Option<slicegen_core::models::Dataset>> {
    match &cfg.data {
        DataSource::Mnist { images, labels, radius, .. } => {
            let rng = RngStream::new(cfg.seed, cfg.experiment.root_stream());
            Ok(Some(load_mnist_idx(images, labels, None, *radius, &rng)?))
        }
        _ => Ok(None),
    }
}

/// Drop non-finite numbers, which JSON cannot carry, and say so.
fn sanitize(out: &mut Outcome, warnings: &mut Vec<String>, index: usize) {
    let bad: Vec<String> = out.metrics.iter().filter(|(_, v)| !v.is_finite()).map(|(k, _)| k.clone()).collect();
    for k in bad {
        warnings.push(format!("point {index}: metric {k} is not finite and was dropped"));
        out.metrics.remove(&k);
    }
    let bad: Vec<String> = out
        .bands
        .iter()
        .filter(|(_, s)| ![s.mean, s.lo, s.hi, s.stderr].iter().all(|v| v.is_finite()))
        .map(|(k, _)| k.clone())
        .collect();
    for k in bad {
        warnings.push(format!("point {index}: band {k} is not finite and was dropped"));
        out.bands.remove(&k);
    }
    for c in &mut out.cells {
        c.values.retain(|_, v| v.is_finite());
    }
}

fn report_is_finite(out: &Outcome) -> bool {
    out.report.as_ref().map_or(true, |r| {
        r.per_theta.iter().all(|v| v.is_finite())
            && r.gen_error.as_ref().map_or(true, |g| [g.summary.mean, g.summary.lo, g.summary.hi, g.summary.stderr].iter().all(|v| v.is_finite()))
    })
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

fn evaluate(ctx: &Context<'_>, index: usize, point: &GridPoint, warnings: &mut Vec<String>) -> PointRecord {
    let result = catch_unwind(AssertUnwindSafe(|| run_point(ctx, point)))
        .unwrap_or_else(|p| Err(HarnessError::Panicked(panic_message(p))));
    match result {
        Ok(mut out) if report_is_finite(&out) => {
            sanitize(&mut out, warnings, index);
            PointRecord {
                index,
                point: point.clone(),
                big_d: out.big_d,
                status: PointStatus::Ok,
                report: out.report,
                metrics: out.metrics,
                bands: out.bands,
                cells: out.cells,
            }
        }
        Ok(out) => failed(index, point, out.big_d, "bound or error estimate is not finite".into()),
        Err(e) => failed(index, point, 0, e.to_string()),
    }
}

fn failed(index: usize, point: &GridPoint, big_d: usize, error: String) -> PointRecord {
    PointRecord {
        index,
        point: point.clone(),
        big_d,
        status: PointStatus::Failed { error },
        report: None,
        metrics: BTreeMap::new(),
        bands: BTreeMap::new(),
        cells: Vec::new(),
    }
}

/// Write the record and its tables into `dir`.
pub fn persist(record: &RunRecord, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    record.save(&dir.join("runrecord.json"))?;
    write_atomic(&dir.join("results.csv"), record.results_csv()?.as_bytes())?;
    write_atomic(&dir.join("terms.csv"), record.terms_csv()?.as_bytes())
}

/// Execute every grid point of `cfg`. A failing point is recorded and the
/// sweep continues; finished points are appended to `points.jsonl` as they
/// complete, so an interruption never loses them.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunRecord> {
    cfg.validate()?;
    let started = Instant::now();
    let out_dir = opts.out_dir.clone().or_else(|| cfg.output_dir.clone());
    let mut log = match &out_dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
            Some(PointLog::create(&dir.join("points.jsonl"))?)
        }
        None => None,
    };
    let ctx = Context {
        cfg,
        root: RngStream::new(cfg.seed, cfg.experiment.root_stream()),
        pool: load_pool(cfg)?,
        latents: Mutex::new(BTreeMap::new()),
    };
    let mut record = RunRecord::new(cfg.clone(), opts.overrides.clone());
    record.timing.threads = current_threads();
    let points = grid_points(cfg);
    let mut interrupted = false;
    for (index, point) in points.iter().enumerate() {
        if opts.cancel.as_ref().is_some_and(|c| c.load(Ordering::SeqCst)) {
            interrupted = true;
            record.warnings.push(format!("interrupted after {index} of {} points", points.len()));
            break;
        }
        let t0 = Instant::now();
        let rec = evaluate(&ctx, index, point, &mut record.warnings);
        record.timing.per_point_secs.push(t0.elapsed().as_secs_f64());
        if let Some(l) = log.as_mut() {
            l.append(&rec)?;
        }
        if let Some(p) = &opts.progress {
            p(&progress_line(&rec, points.len(), t0.elapsed().as_secs_f64()));
        }
        record.points.push(rec);
    }
    record.completed = !interrupted;
    record.timing.total_secs = started.elapsed().as_secs_f64();
    if let Some(dir) = &out_dir {
        persist(&record, dir)?;
    }
    Ok(record)
}

fn progress_line(rec: &PointRecord, total: usize, secs: f64) -> String {
    let p = &rec.point;
    let mut s = format!("[{}/{}] d={} n={}", rec.index + 1, total, p.d, p.n);
    if let Some(l) = p.lambda {
        s.push_str(&format!(" lambda={l}"));
    }
    if let Some(l) = p.levels {
        s.push_str(&format!(" L={l}"));
    }
    match (&rec.status, &rec.report) {
        (PointStatus::Ok, Some(r)) => {
            s.push_str(&format!(" bound={:.6}", r.value()));
            if let Some(g) = &r.gen_error {
                s.push_str(&format!(" gen_err={:.6}", g.summary.mean));
            }
        }
        (PointStatus::Failed { error }, _) => s.push_str(&format!(" FAILED: {error}")),
        _ => {}
    }
    s.push_str(&format!(" ({secs:.1}s)"));
    s
}
