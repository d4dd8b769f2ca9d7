//! Ground-truth simulation, measurement generation, and the Monte Carlo
//! experiment driver.
//!
//! Randomness is organized around one seed and counter-mode streams: run
//! `k` draws target motion from stream `2k` and detections plus clutter
//! from stream `2k + 1`. Truth therefore stays fixed when detection
//! parameters change, and every report is reproducible for a given
//! scenario and seed.

use crate::filter::{FilterError, MeasurementFrame, NtypeFilter, StepCounters};
use crate::gaussian::{MeasVector, StateVector};
use crate::metrics::{ospa, OspaParams};
use crate::scenario::{Scenario, ScenarioError};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Distance order used when scoring runs.
pub const OSPA_ORDER: f64 = 1.0;
/// Distance cutoff used when scoring runs.
pub const OSPA_CUTOFF: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

/// What a generator's draws are spent on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamPurpose {
    /// Process noise in the ground truth.
    Motion = 0,
    /// Detection coin flips, measurement noise, and clutter.
    Sensing = 1,
}

/// Generator for one run and purpose, independent of all others.
pub fn run_rng(seed: u64, run_index: u32, purpose: StreamPurpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::from(run_index) * 2 + purpose as u64);
    rng
}

// ---------------------------------------------------------------------------
// Truth
// ---------------------------------------------------------------------------

/// One live target at one time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthState {
    pub target_id: u32,
    pub type_id: usize,
    pub state: StateVector,
}

/// Propagates every trajectory over the horizon, one entry per step with
/// targets in trajectory order.
///
/// Targets follow constant-velocity motion from their birth step through
/// their death step, exactly by default or with sampled accelerations when
/// the scenario asks for truth process noise. A target that wanders outside
/// the region is dropped for good.
pub fn generate_truth(scenario: &Scenario, rng: &mut ChaCha8Rng) -> Vec<Vec<TruthState>> {
    let dt = scenario.dt;
    let mut current: Vec<Option<StateVector>> = vec![None; scenario.trajectories.len()];
    let mut steps = Vec::with_capacity(scenario.horizon as usize);
    for step in 1..=scenario.horizon {
        let mut alive = Vec::new();
        for (idx, traj) in scenario.trajectories.iter().enumerate() {
            if step == traj.birth_step {
                current[idx] = Some(StateVector::from(traj.initial));
            } else if step > traj.death_step {
                current[idx] = None;
            } else if let Some(state) = current[idx] {
                let mut next = state;
                next[0] += state[2] * dt;
                next[1] += state[3] * dt;
                if scenario.truth_process_noise {
                    let sigma = scenario.sigma_v[traj.type_id];
                    let ax: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
                    let ay: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
                    next[0] += 0.5 * dt * dt * ax;
                    next[1] += 0.5 * dt * dt * ay;
                    next[2] += dt * ax;
                    next[3] += dt * ay;
                }
                current[idx] = scenario.region.contains_position(&next).then_some(next);
            }
            if let Some(state) = current[idx] {
                alive.push(TruthState {
                    target_id: traj.target_id,
                    type_id: traj.type_id,
                    state,
                });
            }
        }
        steps.push(alive);
    }
    steps
}

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

/// Who produced a measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementOrigin {
    Target(u32),
    Clutter,
}

/// One frame of detector returns with their origins recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedFrame {
    pub frame: MeasurementFrame,
    /// Parallel to `frame.per_detector`.
    pub origins: Vec<Vec<MeasurementOrigin>>,
}

/// Generates detector frames for the given truth, one per step.
///
/// Each detector sees targets of its own type at the matching diagonal
/// detection probability and targets wired to it at the wire probability;
/// hits carry isotropic position noise. Clutter counts are Poisson by
/// default or pinned at the rounded rate, with positions uniform over the
/// region.
pub fn generate_measurements(
    scenario: &Scenario,
    truth: &[Vec<TruthState>],
    rng: &mut ChaCha8Rng,
) -> Vec<SimulatedFrame> {
    let wires: HashMap<(usize, u32), f64> = scenario
        .wiring
        .iter()
        .map(|w| ((w.detector, w.target_id), w.p_detect))
        .collect();
    let clutter_dist = (!scenario.clutter_fixed_count && scenario.clutter_rate > 0.0)
        .then(|| Poisson::new(scenario.clutter_rate).expect("positive clutter rate"));
    let fixed_count = scenario.clutter_rate.round() as usize;
    let region = scenario.region;

    let mut frames = Vec::with_capacity(truth.len());
    for (k, targets) in truth.iter().enumerate() {
        let mut per_detector = Vec::with_capacity(scenario.n_types);
        let mut origins = Vec::with_capacity(scenario.n_types);
        for detector in 0..scenario.n_types {
            let mut zs = Vec::new();
            let mut os = Vec::new();
            for t in targets {
                let p = if t.type_id == detector {
                    scenario.detection[detector][detector]
                } else {
                    wires.get(&(detector, t.target_id)).copied().unwrap_or(0.0)
                };
                if p > 0.0 && rng.random_bool(p) {
                    let nx: f64 = rng.sample(StandardNormal);
                    let ny: f64 = rng.sample(StandardNormal);
                    zs.push(MeasVector::new(
                        t.state[0] + scenario.sigma_r * nx,
                        t.state[1] + scenario.sigma_r * ny,
                    ));
                    os.push(MeasurementOrigin::Target(t.target_id));
                }
            }
            let n_clutter = match &clutter_dist {
                Some(dist) => dist.sample(rng) as usize,
                None if scenario.clutter_fixed_count => fixed_count,
                None => 0,
            };
            for _ in 0..n_clutter {
                zs.push(MeasVector::new(
                    rng.random_range(region.x_min..region.x_max),
                    rng.random_range(region.y_min..region.y_max),
                ));
                os.push(MeasurementOrigin::Clutter);
            }
            per_detector.push(zs);
            origins.push(os);
        }
        frames.push(SimulatedFrame {
            frame: MeasurementFrame {
                time_index: k as u32 + 1,
                per_detector,
            },
            origins,
        });
    }
    frames
}

/// Truth and measurements for one Monte Carlo run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedRun {
    pub truth: Vec<Vec<TruthState>>,
    pub frames: Vec<SimulatedFrame>,
}

pub fn simulate_run(scenario: &Scenario, run_index: u32) -> SimulatedRun {
    let mut motion_rng = run_rng(scenario.rng_seed, run_index, StreamPurpose::Motion);
    let truth = generate_truth(scenario, &mut motion_rng);
    let mut sensing_rng = run_rng(scenario.rng_seed, run_index, StreamPurpose::Sensing);
    let frames = generate_measurements(scenario, &truth, &mut sensing_rng);
    SimulatedRun { truth, frames }
}

// ---------------------------------------------------------------------------
// Filtering a full run
// ---------------------------------------------------------------------------

/// Which filter configuration processes the frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    /// Coupled filter: other types' predictions enter each update as
    /// additional clutter.
    Ntype,
    /// Per-type baseline that ignores cross-type detections.
    Independent,
}

impl FilterMode {
    pub fn label(&self) -> &'static str {
        match self {
            FilterMode::Ntype => "ntype",
            FilterMode::Independent => "independent",
        }
    }
}

impl std::fmt::Display for FilterMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Per-step filter outputs over a full run.
#[derive(Debug, Clone)]
pub struct FilterRun {
    /// Extracted states per step per type.
    pub extracted: Vec<Vec<Vec<StateVector>>>,
    /// Posterior weight mass per step per type.
    pub expected_cardinality: Vec<Vec<f64>>,
    /// Update-stage work summed over all steps.
    pub counters: StepCounters,
}

/// Runs the filter over every frame from an empty initial state.
pub fn run_filter(
    filter: &NtypeFilter,
    frames: &[MeasurementFrame],
) -> Result<FilterRun, FilterError> {
    let mut state = filter.initial_state();
    let mut extracted = Vec::with_capacity(frames.len());
    let mut expected_cardinality = Vec::with_capacity(frames.len());
    let mut counters = StepCounters::default();
    for frame in frames {
        let result = filter.step(&state, frame)?;
        state = result.state;
        expected_cardinality.push(
            state
                .intensities
                .iter()
                .map(|i| i.expected_cardinality())
                .collect(),
        );
        extracted.push(result.extracted);
        counters += result.counters;
    }
    Ok(FilterRun {
        extracted,
        expected_cardinality,
        counters,
    })
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

/// Planar positions of the targets, all of them or one type's.
pub fn truth_positions(targets: &[TruthState], type_id: Option<usize>) -> Vec<MeasVector> {
    targets
        .iter()
        .filter(|t| type_id.is_none_or(|id| t.type_id == id))
        .map(|t| MeasVector::new(t.state[0], t.state[1]))
        .collect()
}

/// Planar positions of extracted states.
pub fn state_positions(states: &[StateVector]) -> Vec<MeasVector> {
    states.iter().map(|s| MeasVector::new(s[0], s[1])).collect()
}

/// One run's evaluation series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSeries {
    pub run_index: u32,
    /// Distance per step with all types pooled.
    pub ospa: Vec<f64>,
    /// Live targets per step, all types pooled.
    pub truth_count: Vec<usize>,
    /// Extracted states per step, all types pooled.
    pub estimated_count: Vec<usize>,
    /// Mean distance over the horizon, per type.
    pub per_type_ospa: Vec<f64>,
}

/// Scores one run's extracted states against its truth.
pub fn evaluate_run(
    run_index: u32,
    truth: &[Vec<TruthState>],
    extracted: &[Vec<Vec<StateVector>>],
    params: &OspaParams,
    n_types: usize,
) -> RunSeries {
    let horizon = truth.len();
    let mut ospa_series = Vec::with_capacity(horizon);
    let mut truth_count = Vec::with_capacity(horizon);
    let mut estimated_count = Vec::with_capacity(horizon);
    let mut per_type_sums = vec![0.0; n_types];
    for k in 0..horizon {
        let truth_all = truth_positions(&truth[k], None);
        let est_all: Vec<MeasVector> = extracted[k]
            .iter()
            .flat_map(|states| state_positions(states))
            .collect();
        ospa_series.push(ospa(&truth_all, &est_all, params));
        truth_count.push(truth_all.len());
        estimated_count.push(est_all.len());
        for (i, sum) in per_type_sums.iter_mut().enumerate() {
            let truth_i = truth_positions(&truth[k], Some(i));
            let est_i = state_positions(&extracted[k][i]);
            *sum += ospa(&truth_i, &est_i, params);
        }
    }
    let per_type_ospa = per_type_sums
        .iter()
        .map(|sum| sum / horizon as f64)
        .collect();
    RunSeries {
        run_index,
        ospa: ospa_series,
        truth_count,
        estimated_count,
        per_type_ospa,
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeOutcome {
    pub mode: FilterMode,
    /// Mean over runs of each run's mean pooled distance.
    pub mean_ospa: f64,
    /// Sample standard deviation of the per-run means.
    pub std_over_runs: f64,
    pub runs: Vec<RunSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub confusion: f64,
    pub modes: Vec<ModeOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub seed: u64,
    pub mc_runs: u32,
    pub ospa_order: f64,
    pub ospa_cutoff: f64,
    pub levels: Vec<LevelReport>,
}

/// Monte Carlo sweep over confusion levels and filter modes.
///
/// Each run simulates one set of frames per level and feeds it to every
/// requested mode, so mode comparisons are paired. Runs execute in
/// parallel; the report is ordered and identical across repeats.
pub fn run_experiment(
    scenario: &Scenario,
    levels: &[f64],
    mc_runs: u32,
    modes: &[FilterMode],
) -> Result<MonteCarloReport, SimError> {
    scenario.validate()?;
    let params = OspaParams::new(OSPA_ORDER, OSPA_CUTOFF).expect("fixed scoring parameters");

    let mut level_reports = Vec::with_capacity(levels.len());
    for &confusion in levels {
        let leveled = scenario.with_confusion_level(confusion);
        let filters: Vec<(FilterMode, NtypeFilter)> = modes
            .iter()
            .map(|&mode| {
                let filter = match mode {
                    FilterMode::Ntype => leveled.ntype_filter(),
                    FilterMode::Independent => leveled.independent_filter(),
                }?;
                Ok::<_, ScenarioError>((mode, filter))
            })
            .collect::<Result<_, _>>()?;

        let per_run: Vec<Vec<RunSeries>> = (0..mc_runs)
            .into_par_iter()
            .map(|run_index| {
                let sim = simulate_run(&leveled, run_index);
                let frames: Vec<MeasurementFrame> =
                    sim.frames.iter().map(|f| f.frame.clone()).collect();
                filters
                    .iter()
                    .map(|(_, filter)| {
                        let run = run_filter(filter, &frames)?;
                        Ok(evaluate_run(
                            run_index,
                            &sim.truth,
                            &run.extracted,
                            &params,
                            scenario.n_types,
                        ))
                    })
                    .collect::<Result<Vec<_>, FilterError>>()
            })
            .collect::<Result<Vec<_>, _>>()?;

        let modes_out = filters
            .iter()
            .enumerate()
            .map(|(m, &(mode, _))| {
                let runs: Vec<RunSeries> = per_run.iter().map(|r| r[m].clone()).collect();
                let per_run_means: Vec<f64> = runs.iter().map(|r| mean(&r.ospa)).collect();
                ModeOutcome {
                    mode,
                    mean_ospa: mean(&per_run_means),
                    std_over_runs: sample_std(&per_run_means),
                    runs,
                }
            })
            .collect();
        level_reports.push(LevelReport {
            confusion,
            modes: modes_out,
        });
    }

    Ok(MonteCarloReport {
        seed: scenario.rng_seed,
        mc_runs,
        ospa_order: OSPA_ORDER,
        ospa_cutoff: OSPA_CUTOFF,
        levels: level_reports,
    })
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}
