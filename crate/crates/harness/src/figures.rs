//! SVG figures from a run record.
//!
//! Bounds are drawn dashed and measured errors solid; each series carries a
//! shaded band spanning its `lo..hi` interval.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use plotters::series::DashedLineSeries;

use crate::config::ExperimentKind;
use crate::error::{HarnessError, Result};
use crate::record::{PointRecord, RunRecord};
use crate::run::persist;

const PANEL: (u32, u32) = (560, 420);
const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

#[derive(Debug, Default)]
pub struct FigureOutput {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct Pt {
    x: f64,
    mean: f64,
    lo: f64,
    hi: f64,
}

struct Series {
    label: String,
    dashed: bool,
    color: usize,
    pts: Vec<Pt>,
}

struct Panel {
    title: String,
    xlabel: String,
    ylabel: String,
    logx: bool,
    logy: bool,
    series: Vec<Series>,
}

struct Figure {
    name: String,
    panels: Vec<Panel>,
}

/// Write one SVG per figure into `dir/figures` and refresh the CSV tables in
/// `dir`. Incomplete or partly failed records still render what they have.
pub fn emit_figures(record: &RunRecord, dir: &Path) -> Result<FigureOutput> {
    if record.ok_points().next().is_none() {
        return Err(HarnessError::EmptyRecord);
    }
    let mut out = FigureOutput::default();
    if !record.completed {
        out.warnings.push("record is incomplete; figures show finished points only".into());
    }
    let failed = record.failed_points();
    if failed > 0 {
        out.warnings.push(format!("{failed} failed points are omitted"));
    }
    persist(record, dir)?;
    let fig_dir = dir.join("figures");
    std::fs::create_dir_all(&fig_dir).map_err(|e| HarnessError::io(&fig_dir, e))?;
    for fig in figures_for(record) {
        let mut panels = Vec::new();
        for mut p in fig.panels {
            let dropped = drop_unplottable(&mut p);
            if dropped > 0 {
                out.warnings.push(format!("{}: {dropped} non-positive values left off log axes", fig.name));
            }
            if p.series.iter().any(|s| !s.pts.is_empty()) {
                panels.push(p);
            }
        }
        if panels.is_empty() {
            out.warnings.push(format!("{}: nothing to plot", fig.name));
            continue;
        }
        let path = fig_dir.join(format!("{}.svg", fig.name));
        render(&path, &panels)?;
        out.files.push(path);
    }
    Ok(out)
}

fn figures_for(record: &RunRecord) -> Vec<Figure> {
    let pts: Vec<&PointRecord> = record.ok_points().collect();
    let by_d = |p: &PointRecord| format!("d={}", p.point.d);
    let by_n = |p: &PointRecord| format!("n={}", p.point.n);
    let x_n = |p: &PointRecord| p.point.n as f64;
    let x_d = |p: &PointRecord| p.point.d as f64;
    let x_lambda = |p: &PointRecord| p.point.lambda.unwrap_or(0.0);
    let x_levels = |p: &PointRecord| p.point.levels.unwrap_or(0) as f64;
    let pair = |key_x: &dyn Fn(&PointRecord) -> f64, group: &dyn Fn(&PointRecord) -> String| {
        let mut s = band_series(&pts, "bound", group, key_x, true);
        s.extend(band_series(&pts, "gen_error", group, key_x, false));
        s
    };
    let panel = |title: &str, xlabel: &str, ylabel: &str, logx: bool, logy: bool, series: Vec<Series>| Panel {
        title: title.into(),
        xlabel: xlabel.into(),
        ylabel: ylabel.into(),
        logx,
        logy,
        series,
    };
    let tag = record.config.experiment.tag();
    match record.config.experiment {
        ExperimentKind::Gme | ExperimentKind::Linreg => vec![Figure {
            name: format!("{tag}_bound_vs_n"),
            panels: vec![panel("bound and generalization error", "n", "value", true, true, pair(&x_n, &by_d))],
        }],
        ExperimentKind::Logistic => vec![Figure {
            name: format!("{tag}_bound_vs_n"),
            panels: vec![
                panel("bound and generalization error", "n", "value", true, false, pair(&x_n, &by_d)),
                panel("estimated information", "n", "nats", true, false, band_series(&pts, "mi", &by_d, &x_n, false)),
            ],
        }],
        ExperimentKind::QuantizedNn => {
            let mut acc = band_series(&pts, "train_acc", &by_n, &x_d, false);
            acc.extend(band_series(&pts, "test_acc", &by_n, &x_d, false));
            acc.extend(band_series(&pts, "test_acc_unquantized", &by_n, &x_d, true));
            vec![Figure {
                name: format!("{tag}_bound_vs_d"),
                panels: vec![
                    panel("bound and generalization error", "d", "value", true, false, pair(&x_d, &by_n)),
                    panel("accuracy", "d", "accuracy", true, false, acc),
                ],
            }]
        }
        ExperimentKind::RateDistortionNn => {
            let mut terms = band_series(&pts, "distortion_term", &by_d, &x_lambda, true);
            terms.extend(band_series(&pts, "rate_term", &by_d, &x_lambda, false));
            let mut risk = band_series(&pts, "train_risk", &by_d, &x_lambda, true);
            risk.extend(band_series(&pts, "test_risk", &by_d, &x_lambda, false));
            let mut acc = band_series(&pts, "train_acc", &by_d, &x_lambda, true);
            acc.extend(band_series(&pts, "test_acc", &by_d, &x_lambda, false));
            vec![Figure {
                name: format!("{tag}_vs_lambda"),
                panels: vec![
                    panel("bound and generalization error", "lambda", "value", false, false, pair(&x_lambda, &by_d)),
                    panel("bound terms", "lambda", "value", false, false, terms),
                    panel("risk", "lambda", "loss", false, false, risk),
                    panel("accuracy", "lambda", "accuracy", false, false, acc),
                ],
            }]
        }
        ExperimentKind::QuantLevelSweep => {
            let group = |p: &PointRecord| format!("d={} n={}", p.point.d, p.point.n);
            let mut bound = band_series(&pts, "bound", &group, &x_levels, true);
            bound.extend(band_series(&pts, "gen_error", &group, &x_levels, false));
            vec![Figure {
                name: format!("{tag}_vs_levels"),
                panels: vec![
                    panel("bits per model", "levels", "bits", true, false, band_series(&pts, "bits", &group, &x_levels, false)),
                    panel("bound and generalization error", "levels", "value", true, false, bound),
                ],
            }]
        }
    }
}

/// One series per group, sorted by `x`, from the named band.
fn band_series(
    pts: &[&PointRecord],
    key: &str,
    group: &dyn Fn(&PointRecord) -> String,
    x: &dyn Fn(&PointRecord) -> f64,
    dashed: bool,
) -> Vec<Series> {
    let mut groups: BTreeMap<String, Vec<Pt>> = BTreeMap::new();
    for p in pts {
        if let Some(b) = p.band(key) {
            groups.entry(group(p)).or_default().push(Pt { x: x(p), mean: b.mean, lo: b.lo, hi: b.hi });
        }
    }
    groups
        .into_iter()
        .enumerate()
        .map(|(i, (g, mut pts))| {
            pts.sort_by(|a, b| a.x.total_cmp(&b.x));
            Series { label: format!("{key} {g}"), dashed, color: i % PALETTE.len(), pts }
        })
        .collect()
}

/// Map log axes to log10 and remove points that cannot be shown there.
/// Band edges at or below zero are raised to the smallest positive mean.
fn drop_unplottable(p: &mut Panel) -> usize {
    let floor = p.series.iter().flat_map(|s| s.pts.iter().map(|q| q.mean)).filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let mut dropped = 0;
    for s in &mut p.series {
        let before = s.pts.len();
        s.pts.retain(|q| (!p.logx || q.x > 0.0) && (!p.logy || q.mean > 0.0));
        dropped += before - s.pts.len();
        for q in &mut s.pts {
            if p.logx {
                q.x = q.x.log10();
            }
            if p.logy {
                q.mean = q.mean.log10();
                q.lo = q.lo.max(floor).log10();
                q.hi = q.hi.max(floor).log10();
            }
        }
    }
    dropped
}

fn span(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 * lo.abs().max(1.0) };
    (lo - pad, hi + pad)
}

fn plot_err<E: std::fmt::Display>(e: E) -> HarnessError {
    HarnessError::Plot(e.to_string())
}

fn render(path: &Path, panels: &[Panel]) -> Result<()> {
    let cols = if panels.len() > 1 { 2 } else { 1 };
    let rows = panels.len().div_ceil(cols);
    let size = (PANEL.0 * cols as u32, PANEL.1 * rows as u32);
    let root = SVGBackend::new(path, size).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let areas = root.split_evenly((rows, cols));
    for (area, panel) in areas.iter().zip(panels) {
        draw_panel(area, panel)?;
    }
    root.present().map_err(plot_err)
}

fn axis_label(v: f64, log: bool) -> String {
    let v = if log { 10f64.powf(v) } else { v };
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-3) {
        format!("{v:.1e}")
    } else {
        format!("{}", (v * 1e4).round() / 1e4)
    }
}

fn draw_panel<DB: DrawingBackend>(area: &DrawingArea<DB, plotters::coord::Shift>, p: &Panel) -> Result<()> {
    let all = || p.series.iter().flat_map(|s| s.pts.iter());
    let xr = span(all().map(|q| q.x));
    let yr = span(all().flat_map(|q| [q.mean, q.lo, q.hi]));
    let mut chart = ChartBuilder::on(area)
        .caption(&p.title, ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(60)
        .build_cartesian_2d(xr.0..xr.1, yr.0..yr.1)
        .map_err(plot_err)?;
    let (logx, logy) = (p.logx, p.logy);
    let fx = move |v: &f64| axis_label(*v, logx);
    let fy = move |v: &f64| axis_label(*v, logy);
    chart
        .configure_mesh()
        .x_desc(&p.xlabel)
        .y_desc(&p.ylabel)
        .x_label_formatter(&fx)
        .y_label_formatter(&fy)
        .light_line_style(WHITE)
        .draw()
        .map_err(plot_err)?;
    for s in &p.series {
        let color = PALETTE[s.color];
        if s.pts.len() > 1 {
            let mut poly: Vec<(f64, f64)> = s.pts.iter().map(|q| (q.x, q.hi)).collect();
            poly.extend(s.pts.iter().rev().map(|q| (q.x, q.lo)));
            chart.draw_series(std::iter::once(Polygon::new(poly, color.mix(0.15).filled()))).map_err(plot_err)?;
        }
        let line: Vec<(f64, f64)> = s.pts.iter().map(|q| (q.x, q.mean)).collect();
        let style = color.stroke_width(2);
        let anno = if s.dashed {
            chart.draw_series(DashedLineSeries::new(line.clone(), 8, 5, style)).map_err(plot_err)?
        } else {
            chart.draw_series(LineSeries::new(line.clone(), style)).map_err(plot_err)?
        };
        anno.label(&s.label).legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
        chart.draw_series(line.iter().map(|&(x, y)| Circle::new((x, y), 3, color.filled()))).map_err(plot_err)?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .label_font(("sans-serif", 12))
        .draw()
        .map_err(plot_err)?;
    Ok(())
}
