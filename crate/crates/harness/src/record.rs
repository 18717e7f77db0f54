//! Run records and their tabular exports.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use slicegen_core::bounds::BoundReport;
use slicegen_core::numeric::Summary;

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const FORMAT_VERSION: u32 = 1;

/// One point of the sweep. Axes an experiment does not use stay unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub d: usize,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
}

impl GridPoint {
    /// Stream tags identifying this point by value, so results do not depend
    /// on where the point sits in the grid.
    pub fn tags(&self) -> [u64; 4] {
        [
            self.d as u64,
            self.n as u64,
            self.lambda.map_or(u64::MAX, f64::to_bits),
            self.levels.map_or(u64::MAX, |l| l as u64),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    Failed { error: String },
}

/// Raw measurements of one (run, projector) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub run: usize,
    pub theta: usize,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub point: GridPoint,
    /// Ambient parameter count at this point.
    #[serde(rename = "D")]
    pub big_d: usize,
    pub status: PointStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<BoundReport>,
    /// Scalar results (means, counts, flags as 0/1).
    #[serde(default)]
    pub metrics: BTreeMap<String, f64>,
    /// Quantities with a 2.5/97.5 percentile band over cells.
    #[serde(default)]
    pub bands: BTreeMap<String, Summary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<CellRecord>,
}

impl PointRecord {
    pub fn is_ok(&self) -> bool {
        self.status == PointStatus::Ok
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    pub fn band(&self, key: &str) -> Option<&Summary> {
        self.bands.get(key)
    }
}

/// Wall-clock figures. Kept apart from the numeric results, which must be
/// byte-identical across executions.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_secs: f64,
    pub per_point_secs: Vec<f64>,
    pub threads: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub format_version: u32,
    pub library_version: String,
    pub config: ExperimentConfig,
    /// `key=value` overrides as given, already applied to `config`.
    #[serde(default)]
    pub overrides: Vec<String>,
    pub points: Vec<PointRecord>,
    /// False when the run was interrupted before the grid finished.
    pub completed: bool,
    #[serde(default)]
    pub warnings: Vec<String>,
    #[serde(default)]
    pub timing: Timing,
}

impl RunRecord {
    pub fn new(config: ExperimentConfig, overrides: Vec<String>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            overrides,
            points: Vec::new(),
            completed: false,
            warnings: Vec::new(),
            timing: Timing::default(),
        }
    }

    pub fn failed_points(&self) -> usize {
        self.points.iter().filter(|p| !p.is_ok()).count()
    }

    pub fn ok_points(&self) -> impl Iterator<Item = &PointRecord> {
        self.points.iter().filter(|p| p.is_ok())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let probe: serde_json::Value = serde_json::from_str(text)?;
        let found = probe.get("format_version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
        if found != FORMAT_VERSION {
            return Err(HarnessError::Schema { found, expected: FORMAT_VERSION });
        }
        Ok(serde_json::from_value(probe)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    fn has_lambda(&self) -> bool {
        !self.config.grid.lambda.is_empty()
    }

    /// One row per completed point with the bound and error bands.
    pub fn results_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["family", "d", "D", "n"];
        if self.has_lambda() {
            header.push("lambda");
        }
        header.extend([
            "L_levels", "bound_mean", "bound_lo", "bound_hi", "gen_err_mean", "gen_err_lo", "gen_err_hi", "holds",
        ]);
        w.write_record(&header)?;
        for p in self.ok_points() {
            let Some(r) = &p.report else { continue };
            let mut row = vec![r.family.tag().to_string(), p.point.d.to_string(), p.big_d.to_string(), p.point.n.to_string()];
            if self.has_lambda() {
                row.push(opt(p.point.lambda));
            }
            row.push(p.point.levels.map(|l| l.to_string()).unwrap_or_default());
            row.extend([num(r.summary.mean), num(r.summary.lo), num(r.summary.hi)]);
            match &r.gen_error {
                Some(g) => row.extend([num(g.summary.mean), num(g.summary.lo), num(g.summary.hi)]),
                None => row.extend([String::new(), String::new(), String::new()]),
            }
            row.push(r.holds.map(|h| h.to_string()).unwrap_or_default());
            w.write_record(&row)?;
        }
        finish(w)
    }

    /// Long-format table of every banded quantity.
    pub fn terms_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["experiment", "d", "D", "n"];
        if self.has_lambda() {
            header.push("lambda");
        }
        header.extend(["L_levels", "quantity", "mean", "lo", "hi", "count"]);
        w.write_record(&header)?;
        for p in self.ok_points() {
            for (name, s) in &p.bands {
                let mut row = vec![self.config.experiment.tag().to_string(), p.point.d.to_string(), p.big_d.to_string(), p.point.n.to_string()];
                if self.has_lambda() {
                    row.push(opt(p.point.lambda));
                }
                row.push(p.point.levels.map(|l| l.to_string()).unwrap_or_default());
                row.extend([name.clone(), num(s.mean), num(s.lo), num(s.hi), s.count.to_string()]);
                w.write_record(&row)?;
            }
        }
        finish(w)
    }
}

/// Shortest round-trip formatting, so equal numbers give equal bytes.
fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Write via a temporary sibling and rename, so readers never see a torn file.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

/// Append-only log of finished points, one JSON object per line.
pub struct PointLog {
    file: std::fs::File,
    path: std::path::PathBuf,
}

impl PointLog {
    pub fn create(path: &Path) -> Result<Self> {
        let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
        Ok(Self { file, path: path.to_path_buf() })
    }

    pub fn append(&mut self, p: &PointRecord) -> Result<()> {
        let mut line = serde_json::to_string(p)?;
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(|e| HarnessError::io(&self.path, e))?;
        self.file.flush().map_err(|e| HarnessError::io(&self.path, e))
    }
}

/// Read back a point log, ignoring a torn final line.
pub fn read_point_log(path: &Path) -> Result<Vec<PointRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let lines: Vec<&str> = text.lines().collect();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        match serde_json::from_str(line) {
            Ok(p) => out.push(p),
            Err(_) if i + 1 == lines.len() && !text.ends_with('\n') => break,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}
