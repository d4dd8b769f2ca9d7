//! CSV and JSON artifact writers with a fixed numeric format.
//!
//! Every float lands in a file with nine significant digits so that repeat
//! runs with the same seed produce byte-identical artifacts.

use anyhow::{Context, Result};
use ntype_gmphd::gaussian::StateVector;
use ntype_gmphd::sim::{
    FilterMode, MeasurementOrigin, MonteCarloReport, SimulatedFrame, TruthState,
};
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

/// Formats a float with nine significant digits, switching to scientific
/// notation outside a comfortable fixed-point range.
pub fn sig9(value: f64) -> String {
    if !value.is_finite() {
        return value.to_string();
    }
    if value == 0.0 {
        return "0.00000000".to_string();
    }
    let exp = value.abs().log10().floor() as i32;
    if !(-4..9).contains(&exp) {
        format!("{value:.8e}")
    } else {
        let decimals = (8 - exp).max(0) as usize;
        format!("{value:.decimals$}")
    }
}

fn create(dir: &Path, name: &str) -> Result<(BufWriter<File>, PathBuf)> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok((BufWriter::new(file), path))
}

pub fn write_truth_csv(dir: &Path, truth: &[Vec<TruthState>]) -> Result<PathBuf> {
    let (mut w, path) = create(dir, "truth.csv")?;
    writeln!(w, "step,target,type,x,y,vx,vy")?;
    for (k, step) in truth.iter().enumerate() {
        for t in step {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                k + 1,
                t.target_id,
                t.type_id,
                sig9(t.state[0]),
                sig9(t.state[1]),
                sig9(t.state[2]),
                sig9(t.state[3]),
            )?;
        }
    }
    w.flush()?;
    Ok(path)
}

pub fn write_measurements_csv(dir: &Path, frames: &[SimulatedFrame]) -> Result<PathBuf> {
    let (mut w, path) = create(dir, "measurements.csv")?;
    writeln!(w, "step,detector,x,y,origin")?;
    for sim_frame in frames {
        let step = sim_frame.frame.time_index;
        for (detector, (zs, os)) in sim_frame
            .frame
            .per_detector
            .iter()
            .zip(&sim_frame.origins)
            .enumerate()
        {
            for (z, origin) in zs.iter().zip(os) {
                let origin = match origin {
                    MeasurementOrigin::Target(id) => id.to_string(),
                    MeasurementOrigin::Clutter => "clutter".to_string(),
                };
                writeln!(w, "{step},{detector},{},{},{origin}", sig9(z[0]), sig9(z[1]))?;
            }
        }
    }
    w.flush()?;
    Ok(path)
}

pub fn write_estimates_csv(
    dir: &Path,
    mode: FilterMode,
    extracted: &[Vec<Vec<StateVector>>],
) -> Result<PathBuf> {
    let (mut w, path) = create(dir, &format!("estimates_{mode}.csv"))?;
    writeln!(w, "step,type,x,y")?;
    for (k, per_type) in extracted.iter().enumerate() {
        for (type_id, states) in per_type.iter().enumerate() {
            for s in states {
                writeln!(w, "{},{type_id},{},{}", k + 1, sig9(s[0]), sig9(s[1]))?;
            }
        }
    }
    w.flush()?;
    Ok(path)
}

pub fn write_cardinality_csv(
    dir: &Path,
    mode: FilterMode,
    expected: &[Vec<f64>],
) -> Result<PathBuf> {
    let (mut w, path) = create(dir, &format!("cardinality_{mode}.csv"))?;
    writeln!(w, "step,type,expected_cardinality")?;
    for (k, per_type) in expected.iter().enumerate() {
        for (type_id, mass) in per_type.iter().enumerate() {
            writeln!(w, "{},{type_id},{}", k + 1, sig9(*mass))?;
        }
    }
    w.flush()?;
    Ok(path)
}

pub fn write_runs_csv(dir: &Path, report: &MonteCarloReport) -> Result<PathBuf> {
    let (mut w, path) = create(dir, "runs.csv")?;
    writeln!(w, "level,mode,run,step,ospa,truth_count,estimated_count")?;
    for level in &report.levels {
        for outcome in &level.modes {
            for run in &outcome.runs {
                for (k, d) in run.ospa.iter().enumerate() {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        sig9(level.confusion),
                        outcome.mode,
                        run.run_index,
                        k + 1,
                        sig9(*d),
                        run.truth_count[k],
                        run.estimated_count[k],
                    )?;
                }
            }
        }
    }
    w.flush()?;
    Ok(path)
}

pub fn write_per_type_ospa_csv(dir: &Path, report: &MonteCarloReport) -> Result<PathBuf> {
    let (mut w, path) = create(dir, "per_type_ospa.csv")?;
    writeln!(w, "level,mode,run,type,mean_ospa")?;
    for level in &report.levels {
        for outcome in &level.modes {
            for run in &outcome.runs {
                for (type_id, d) in run.per_type_ospa.iter().enumerate() {
                    writeln!(
                        w,
                        "{},{},{},{type_id},{}",
                        sig9(level.confusion),
                        outcome.mode,
                        run.run_index,
                        sig9(*d),
                    )?;
                }
            }
        }
    }
    w.flush()?;
    Ok(path)
}

// ---------------------------------------------------------------------------
// Summary JSON
// ---------------------------------------------------------------------------

/// Aggregate view of an experiment, without the per-run series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub mc_runs: u32,
    pub ospa_order: f64,
    pub ospa_cutoff: f64,
    pub levels: Vec<SummaryLevel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryLevel {
    pub confusion: f64,
    pub modes: Vec<SummaryMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryMode {
    pub mode: FilterMode,
    pub mean_ospa: f64,
    pub std_over_runs: f64,
}

impl Summary {
    pub fn from_report(report: &MonteCarloReport) -> Self {
        Summary {
            seed: report.seed,
            mc_runs: report.mc_runs,
            ospa_order: report.ospa_order,
            ospa_cutoff: report.ospa_cutoff,
            levels: report
                .levels
                .iter()
                .map(|level| SummaryLevel {
                    confusion: level.confusion,
                    modes: level
                        .modes
                        .iter()
                        .map(|outcome| SummaryMode {
                            mode: outcome.mode,
                            mean_ospa: outcome.mean_ospa,
                            std_over_runs: outcome.std_over_runs,
                        })
                        .collect(),
                })
                .collect(),
        }
    }
}

pub fn write_summary_json(dir: &Path, report: &MonteCarloReport) -> Result<PathBuf> {
    let summary = Summary::from_report(report);
    let (mut w, path) = create(dir, "summary.json")?;
    let mut ser =
        serde_json::Serializer::with_formatter(&mut w, Sig9Pretty(PrettyFormatter::new()));
    summary
        .serialize(&mut ser)
        .with_context(|| format!("writing {}", path.display()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(path)
}

pub fn read_summary(path: &Path) -> Result<Summary> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Pretty printer that routes floats through the nine-digit format.
struct Sig9Pretty<'a>(PrettyFormatter<'a>);

impl Formatter for Sig9Pretty<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(sig9(value).as_bytes())
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}
