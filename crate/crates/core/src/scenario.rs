//! Scenario configuration: targets, detector wiring, models, and filter
//! settings, loadable from JSON.
//!
//! Type and detector indices are zero-based throughout; target ids are
//! arbitrary labels. Time steps run from 1 to `horizon` inclusive.

use crate::filter::{FilterParams, NtypeFilter, TypeModels};
use crate::models::{
    make_cv_motion, BirthModel, ClutterModel, DetectionProfile, MeasurementModel, ModelError,
    Region,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One constant-velocity ground-truth target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub target_id: u32,
    pub type_id: usize,
    /// First step at which the target is alive.
    pub birth_step: u32,
    /// Last step at which the target is alive, inclusive.
    pub death_step: u32,
    /// State `[px, py, vx, vy]` at the birth step.
    pub initial: [f64; 4],
}

/// A foreign target that a detector also fires on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForeignWire {
    pub detector: usize,
    pub target_id: u32,
    pub p_detect: f64,
}

/// Complete description of a simulated tracking problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n_types: usize,
    pub horizon: u32,
    pub dt: f64,
    pub region: Region,
    /// Process-noise acceleration level per type.
    pub sigma_v: Vec<f64>,
    pub p_survive: Vec<f64>,
    /// Measurement noise level shared by all detectors.
    pub sigma_r: f64,
    /// Expected clutter returns per detector per frame.
    pub clutter_rate: f64,
    /// Draw exactly `clutter_rate` returns instead of a Poisson count.
    #[serde(default)]
    pub clutter_fixed_count: bool,
    pub birth_weight: f64,
    pub birth_cov_diag: [f64; 4],
    /// Detection matrix: entry `[j][i]` is the probability that detector `j`
    /// fires on a target of type `i`.
    pub detection: Vec<Vec<f64>>,
    /// Cross-type detections beyond each detector's own type.
    pub wiring: Vec<ForeignWire>,
    pub trajectories: Vec<Trajectory>,
    pub filter: FilterParams,
    /// Add sampled process noise to the ground truth.
    #[serde(default)]
    pub truth_process_noise: bool,
    pub rng_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("{field} has {got} entries, expected one per type ({expected})")]
    PerTypeLengthMismatch {
        field: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("trajectory {target_id} has unknown type {type_id}")]
    UnknownType { target_id: u32, type_id: usize },
    #[error("trajectory {target_id} dies at {death_step} before its birth at {birth_step}")]
    DeathBeforeBirth {
        target_id: u32,
        birth_step: u32,
        death_step: u32,
    },
    #[error("duplicate target id {0}")]
    DuplicateTargetId(u32),
    #[error("wire references unknown target id {0}")]
    WireUnknownTarget(u32),
    #[error("wire detector {detector} is out of range for {n_types} types")]
    WireBadDetector { detector: usize, n_types: usize },
    #[error("wire on detector {detector} targets its own type; cross-type wires only")]
    WireOwnType { detector: usize },
    #[error("filter parameters invalid: {0}")]
    Filter(String),
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.horizon == 0 {
            return Err(ScenarioError::EmptyHorizon);
        }
        for (field, len) in [
            ("sigma_v", self.sigma_v.len()),
            ("p_survive", self.p_survive.len()),
            ("detection", self.detection.len()),
        ] {
            if len != self.n_types {
                return Err(ScenarioError::PerTypeLengthMismatch {
                    field,
                    got: len,
                    expected: self.n_types,
                });
            }
        }
        DetectionProfile::new(&self.detection)?;
        self.region.validate()?;
        self.filter
            .validate()
            .map_err(|e| ScenarioError::Filter(e.to_string()))?;

        let mut seen = std::collections::HashSet::new();
        for t in &self.trajectories {
            if t.type_id >= self.n_types {
                return Err(ScenarioError::UnknownType {
                    target_id: t.target_id,
                    type_id: t.type_id,
                });
            }
            if t.death_step < t.birth_step {
                return Err(ScenarioError::DeathBeforeBirth {
                    target_id: t.target_id,
                    birth_step: t.birth_step,
                    death_step: t.death_step,
                });
            }
            if !seen.insert(t.target_id) {
                return Err(ScenarioError::DuplicateTargetId(t.target_id));
            }
        }
        for w in &self.wiring {
            if w.detector >= self.n_types {
                return Err(ScenarioError::WireBadDetector {
                    detector: w.detector,
                    n_types: self.n_types,
                });
            }
            let target = self
                .trajectories
                .iter()
                .find(|t| t.target_id == w.target_id)
                .ok_or(ScenarioError::WireUnknownTarget(w.target_id))?;
            if target.type_id == w.detector {
                return Err(ScenarioError::WireOwnType {
                    detector: w.detector,
                });
            }
        }
        // Building the models surfaces any remaining parameter problems.
        self.type_models()?;
        Ok(())
    }

    /// Copy with every cross-type wire and every wired off-diagonal detection
    /// entry set to `level`.
    pub fn with_confusion_level(&self, level: f64) -> Self {
        let mut out = self.clone();
        let type_of = |id: u32| {
            self.trajectories
                .iter()
                .find(|t| t.target_id == id)
                .map(|t| t.type_id)
        };
        for w in &mut out.wiring {
            w.p_detect = level;
            if let Some(tid) = type_of(w.target_id) {
                out.detection[w.detector][tid] = level;
            }
        }
        out
    }

    pub fn type_models(&self) -> Result<Vec<TypeModels>, ModelError> {
        let mut models = Vec::with_capacity(self.n_types);
        for i in 0..self.n_types {
            models.push(TypeModels {
                motion: make_cv_motion(self.dt, self.sigma_v[i], self.p_survive[i])?,
                measurement: MeasurementModel::position_sensor(self.sigma_r)?,
                clutter: ClutterModel::new(self.clutter_rate, self.region)?,
                birth: BirthModel::diagonal(self.birth_weight, self.birth_cov_diag)?,
            });
        }
        Ok(models)
    }

    pub fn detection_profile(&self) -> Result<DetectionProfile, ModelError> {
        DetectionProfile::new(&self.detection)
    }

    /// The coupled filter configured from this scenario.
    pub fn ntype_filter(&self) -> Result<NtypeFilter, ScenarioError> {
        let profile = self.detection_profile()?;
        NtypeFilter::new(profile, self.type_models()?, self.filter)
            .map_err(|e| ScenarioError::Filter(e.to_string()))
    }

    /// The uncoupled baseline: same models, confusion entries zeroed inside
    /// the filter while the simulated measurements keep their cross-type
    /// detections.
    pub fn independent_filter(&self) -> Result<NtypeFilter, ScenarioError> {
        let profile = self.detection_profile()?.zero_confusion();
        NtypeFilter::new(profile, self.type_models()?, self.filter)
            .map_err(|e| ScenarioError::Filter(e.to_string()))
    }

    pub fn from_json(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }
}

/// Four-type benchmark scene: sixteen constant-velocity targets that sweep
/// across a 2 km square and cross near its center, four targets per type.
///
/// Each detector also fires on exactly one target of every other type, so
/// twelve of the sixteen targets are seen by two detectors.
pub fn default_quad() -> Scenario {
    let region = Region {
        x_min: -1000.0,
        x_max: 1000.0,
        y_min: -1000.0,
        y_max: 1000.0,
    };
    let diag = [0.90, 0.92, 0.92, 0.91];
    let confusion = 0.6;
    let detection: Vec<Vec<f64>> = (0..4)
        .map(|j| {
            (0..4)
                .map(|i| if i == j { diag[j] } else { confusion })
                .collect()
        })
        .collect();

    let spec: [(u32, usize, [f64; 4]); 16] = [
        (1, 0, [-100.0, 700.0, 7.5, -11.7]),
        (2, 0, [-750.0, -100.0, 12.5, 5.0]),
        (3, 0, [-200.0, 400.0, 6.5, -10.0]),
        (4, 0, [-700.0, -400.0, 10.0, 10.0]),
        (5, 1, [-400.0, 600.0, 9.0, -9.2]),
        (6, 1, [-800.0, -600.0, 11.7, 10.0]),
        (7, 1, [-500.0, -200.0, 10.8, 4.2]),
        (8, 1, [700.0, 600.0, -11.7, -8.4]),
        (9, 2, [-900.0, 100.0, 13.4, -3.4]),
        (10, 2, [-800.0, 500.0, 10.9, -10.0]),
        (11, 2, [-900.0, -200.0, 11.7, 5.0]),
        (12, 2, [400.0, -600.0, -8.4, 10.0]),
        (13, 3, [800.0, -600.0, -10.9, 9.2]),
        (14, 3, [500.0, -700.0, -9.2, 9.2]),
        (15, 3, [-700.0, -600.0, 10.9, 9.2]),
        (16, 3, [900.0, -100.0, -13.4, -3.4]),
    ];
    let trajectories = spec
        .iter()
        .map(|&(target_id, type_id, initial)| Trajectory {
            target_id,
            type_id,
            birth_step: 1,
            death_step: 120,
            initial,
        })
        .collect();

    // Detector j sees one target of each other type.
    let wires: [(usize, u32); 12] = [
        (0, 5),
        (0, 9),
        (0, 13),
        (1, 1),
        (1, 10),
        (1, 14),
        (2, 2),
        (2, 6),
        (2, 15),
        (3, 3),
        (3, 7),
        (3, 11),
    ];
    let wiring = wires
        .iter()
        .map(|&(detector, target_id)| ForeignWire {
            detector,
            target_id,
            p_detect: confusion,
        })
        .collect();

    Scenario {
        n_types: 4,
        horizon: 120,
        dt: 1.0,
        region,
        sigma_v: vec![5.0; 4],
        p_survive: vec![0.99; 4],
        sigma_r: 6.0,
        clutter_rate: 10.0,
        clutter_fixed_count: false,
        birth_weight: 3.0e-6,
        birth_cov_diag: [200.0, 200.0, 100.0, 100.0],
        detection,
        wiring,
        trajectories,
        filter: FilterParams::default(),
        truth_process_noise: false,
        rng_seed: 2024,
    }
}
