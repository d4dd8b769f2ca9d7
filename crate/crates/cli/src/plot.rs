//! Static SVG line charts for experiment reports.

use anyhow::{Context, Result};
use ntype_gmphd::sim::{FilterMode, LevelReport, MonteCarloReport};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 56.0;

struct Series {
    label: String,
    color: &'static str,
    dashed: bool,
    markers: bool,
    points: Vec<(f64, f64)>,
}

fn mode_color(mode: FilterMode) -> &'static str {
    match mode {
        FilterMode::Ntype => "#1f77b4",
        FilterMode::Independent => "#d62728",
    }
}

/// Writes every chart for the report: distance and cardinality curves per
/// confusion level, plus the mean distance against confusion.
pub fn write_all(dir: &Path, report: &MonteCarloReport) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for level in &report.levels {
        paths.push(ospa_vs_step(dir, level)?);
        paths.push(cardinality_vs_step(dir, level)?);
    }
    paths.push(mean_ospa_vs_confusion(dir, report)?);
    Ok(paths)
}

fn mean_series_over_runs<F>(level: &LevelReport, value: F) -> Vec<Vec<(f64, f64)>>
where
    F: Fn(&ntype_gmphd::sim::RunSeries, usize) -> f64,
{
    level
        .modes
        .iter()
        .map(|outcome| {
            let horizon = outcome.runs.first().map_or(0, |r| r.ospa.len());
            (0..horizon)
                .map(|k| {
                    let sum: f64 = outcome.runs.iter().map(|r| value(r, k)).sum();
                    (k as f64 + 1.0, sum / outcome.runs.len().max(1) as f64)
                })
                .collect()
        })
        .collect()
}

fn ospa_vs_step(dir: &Path, level: &LevelReport) -> Result<PathBuf> {
    let per_mode = mean_series_over_runs(level, |run, k| run.ospa[k]);
    let series: Vec<Series> = level
        .modes
        .iter()
        .zip(per_mode)
        .map(|(outcome, points)| Series {
            label: outcome.mode.to_string(),
            color: mode_color(outcome.mode),
            dashed: false,
            markers: false,
            points,
        })
        .collect();
    let path = dir.join(format!("ospa_vs_step_c{}.svg", level.confusion));
    render(
        &path,
        &format!("Mean OSPA per step, confusion {}", level.confusion),
        "step",
        "mean OSPA",
        &series,
    )?;
    Ok(path)
}

fn cardinality_vs_step(dir: &Path, level: &LevelReport) -> Result<PathBuf> {
    let mut series = Vec::new();
    if let Some(outcome) = level.modes.first() {
        let horizon = outcome.runs.first().map_or(0, |r| r.truth_count.len());
        let truth: Vec<(f64, f64)> = (0..horizon)
            .map(|k| {
                let sum: f64 = outcome.runs.iter().map(|r| r.truth_count[k] as f64).sum();
                (k as f64 + 1.0, sum / outcome.runs.len().max(1) as f64)
            })
            .collect();
        series.push(Series {
            label: "truth".to_string(),
            color: "#555555",
            dashed: true,
            markers: false,
            points: truth,
        });
    }
    let per_mode = mean_series_over_runs(level, |run, k| run.estimated_count[k] as f64);
    for (outcome, points) in level.modes.iter().zip(per_mode) {
        series.push(Series {
            label: outcome.mode.to_string(),
            color: mode_color(outcome.mode),
            dashed: false,
            markers: false,
            points,
        });
    }
    let path = dir.join(format!("cardinality_vs_step_c{}.svg", level.confusion));
    render(
        &path,
        &format!("Mean reported population per step, confusion {}", level.confusion),
        "step",
        "targets",
        &series,
    )?;
    Ok(path)
}

fn mean_ospa_vs_confusion(dir: &Path, report: &MonteCarloReport) -> Result<PathBuf> {
    let modes: Vec<FilterMode> = report
        .levels
        .first()
        .map(|l| l.modes.iter().map(|m| m.mode).collect())
        .unwrap_or_default();
    let series: Vec<Series> = modes
        .iter()
        .map(|&mode| Series {
            label: mode.to_string(),
            color: mode_color(mode),
            dashed: false,
            markers: true,
            points: report
                .levels
                .iter()
                .filter_map(|level| {
                    level
                        .modes
                        .iter()
                        .find(|m| m.mode == mode)
                        .map(|m| (level.confusion, m.mean_ospa))
                })
                .collect(),
        })
        .collect();
    let path = dir.join("mean_ospa_vs_confusion.svg");
    render(
        &path,
        "Mean OSPA against confusion level",
        "confusion probability",
        "mean OSPA",
        &series,
    )?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn render(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series]) -> Result<()> {
    let xs: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.0)).collect();
    let ys: Vec<f64> = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).collect();
    let (x_min, x_max) = span(&xs, false);
    let (y_min, y_max) = span(&ys, true);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let to_x = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let to_y = |y: f64| MARGIN_TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = write!(
        svg,
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" ",
            "viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"13\">\n"
        ),
        w = WIDTH,
        h = HEIGHT
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n");
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">{title}</text>",
        WIDTH / 2.0
    );

    for (tick, label) in ticks(x_min, x_max) {
        let px = to_x(tick);
        let _ = writeln!(
            svg,
            "<line x1=\"{px:.2}\" y1=\"{:.2}\" x2=\"{px:.2}\" y2=\"{:.2}\" stroke=\"#dddddd\"/>",
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        );
        let _ = writeln!(
            svg,
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{label}</text>",
            MARGIN_TOP + plot_h + 20.0
        );
    }
    for (tick, label) in ticks(y_min, y_max) {
        let py = to_y(tick);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{py:.2}\" x2=\"{:.2}\" y2=\"{py:.2}\" stroke=\"#dddddd\"/>",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{label}</text>",
            MARGIN_LEFT - 8.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{plot_w:.1}\" height=\"{plot_h:.1}\" fill=\"none\" stroke=\"#333333\"/>",
        MARGIN_LEFT, MARGIN_TOP
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{x_label}</text>",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 14.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.1})\">{y_label}</text>",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for s in series {
        let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        if s.points.len() > 1 {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{:.2},{:.2}", to_x(x), to_y(y)))
                .collect();
            let _ = writeln!(
                svg,
                "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"{dash} points=\"{}\"/>",
                s.color,
                pts.join(" ")
            );
        }
        if s.markers || s.points.len() == 1 {
            for &(x, y) in &s.points {
                let _ = writeln!(
                    svg,
                    "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{}\"/>",
                    to_x(x),
                    to_y(y),
                    s.color
                );
            }
        }
    }

    for (i, s) in series.iter().enumerate() {
        let ly = MARGIN_TOP + 16.0 + 18.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w - 150.0;
        let dash = if s.dashed { " stroke-dasharray=\"6 4\"" } else { "" };
        let _ = writeln!(
            svg,
            "<line x1=\"{lx:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{}\" stroke-width=\"1.8\"{dash}/>",
            lx + 26.0,
            s.color
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            lx + 32.0,
            ly + 4.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");

    std::fs::write(path, svg).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Data range padded into a drawable span; counts and distances get a zero
/// floor.
fn span(values: &[f64], zero_floor: bool) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if zero_floor {
        lo = lo.min(0.0);
    }
    if hi - lo < 1e-9 {
        hi = lo + 1.0;
    }
    let pad = (hi - lo) * 0.06;
    (if zero_floor { lo } else { lo - pad }, hi + pad)
}

/// Five or six round tick positions with labels sized to the step.
fn ticks(min: f64, max: f64) -> Vec<(f64, String)> {
    let raw_step = (max - min) / 5.0;
    let magnitude = 10f64.powf(raw_step.log10().floor());
    let residual = raw_step / magnitude;
    let step = magnitude
        * if residual < 1.5 {
            1.0
        } else if residual < 3.0 {
            2.0
        } else if residual < 7.0 {
            5.0
        } else {
            10.0
        };
    let decimals = (-step.log10().floor() as i32).max(0) as usize;
    let mut out = Vec::new();
    let mut k = (min / step).ceil() as i64;
    while (k as f64) * step <= max + 1e-9 * step {
        let v = k as f64 * step;
        out.push((v, format!("{v:.decimals$}")));
        k += 1;
    }
    out
}
