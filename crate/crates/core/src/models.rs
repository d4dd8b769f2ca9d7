//! Motion, measurement, detection, clutter, and birth models.
//!
//! The filters never hard-code scene parameters; everything they need about
//! dynamics, sensors, and clutter comes through these structs.

use crate::gaussian::{
    is_symmetric, GaussianComponent, MeasMatrix, MeasVector, ObsMatrix, StateMatrix, StateVector,
};
use nalgebra::{Cholesky, Matrix2, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while validating model parameters.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("time step must be positive, got {0}")]
    NonPositiveTimeStep(f64),
    #[error("{name} must lie in [0, 1], got {value}")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
    #[error("detection profile needs at least two types, got {0}")]
    TooFewTypes(usize),
    #[error("detection profile row {row} has {len} entries, expected {expected}")]
    RaggedProfile {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("region must satisfy x_min < x_max and y_min < y_max")]
    EmptyRegion,
    #[error("{name} covariance is not symmetric positive definite")]
    BadCovariance { name: &'static str },
}

fn check_probability(name: &'static str, value: f64) -> Result<(), ModelError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::ProbabilityOutOfRange { name, value })
    }
}

// ---------------------------------------------------------------------------
// Motion
// ---------------------------------------------------------------------------

/// Linear state transition with survival probability.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionModel {
    pub transition: StateMatrix,
    pub process_noise: StateMatrix,
    pub p_survive: f64,
}

/// Nearly-constant-velocity motion over time step `dt`: positions integrate
/// velocities, and white acceleration with standard deviation `sigma_v` on
/// each axis drives the process noise.
pub fn make_cv_motion(dt: f64, sigma_v: f64, p_survive: f64) -> Result<MotionModel, ModelError> {
    if !(dt > 0.0) {
        return Err(ModelError::NonPositiveTimeStep(dt));
    }
    if sigma_v < 0.0 {
        return Err(ModelError::Negative {
            name: "sigma_v",
            value: sigma_v,
        });
    }
    check_probability("p_survive", p_survive)?;

    let mut transition = StateMatrix::identity();
    transition[(0, 2)] = dt;
    transition[(1, 3)] = dt;

    let var = sigma_v * sigma_v;
    let pos = dt.powi(4) / 4.0 * var;
    let cross = dt.powi(3) / 2.0 * var;
    let vel = dt.powi(2) * var;
    let mut process_noise = StateMatrix::zeros();
    for axis in 0..2 {
        process_noise[(axis, axis)] = pos;
        process_noise[(axis, axis + 2)] = cross;
        process_noise[(axis + 2, axis)] = cross;
        process_noise[(axis + 2, axis + 2)] = vel;
    }

    Ok(MotionModel {
        transition,
        process_noise,
        p_survive,
    })
}

// ---------------------------------------------------------------------------
// Measurement
// ---------------------------------------------------------------------------

/// Linear observation of position with additive Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub observation: ObsMatrix,
    pub noise: MeasMatrix,
}

impl MeasurementModel {
    /// Position-only sensor with isotropic noise of standard deviation
    /// `sigma_r` on each axis.
    pub fn position_sensor(sigma_r: f64) -> Result<Self, ModelError> {
        if !(sigma_r > 0.0) {
            return Err(ModelError::NonPositive {
                name: "sigma_r",
                value: sigma_r,
            });
        }
        Ok(Self {
            observation: ObsMatrix::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
            noise: Matrix2::identity() * sigma_r * sigma_r,
        })
    }
}

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

/// Detection probabilities for every detector/type pair.
///
/// Entry `(j, i)` is the probability that detector `j` fires on a target of
/// type `i`. Diagonal entries are the detectors' own-type detection
/// probabilities; off-diagonal entries are the confusion probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionProfile {
    n_types: usize,
    probs: Vec<f64>,
}

impl DetectionProfile {
    pub fn new(matrix: &[Vec<f64>]) -> Result<Self, ModelError> {
        let n_types = matrix.len();
        if n_types < 2 {
            return Err(ModelError::TooFewTypes(n_types));
        }
        let mut probs = Vec::with_capacity(n_types * n_types);
        for (row, entries) in matrix.iter().enumerate() {
            if entries.len() != n_types {
                return Err(ModelError::RaggedProfile {
                    row,
                    len: entries.len(),
                    expected: n_types,
                });
            }
            for &p in entries {
                check_probability("detection probability", p)?;
                probs.push(p);
            }
        }
        Ok(Self { n_types, probs })
    }

    /// Diagonal `diag` with every off-diagonal entry set to `confusion`.
    pub fn uniform_confusion(diag: &[f64], confusion: f64) -> Result<Self, ModelError> {
        let n = diag.len();
        let matrix: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { diag[j] } else { confusion }).collect())
            .collect();
        Self::new(&matrix)
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    /// Probability that `detector` fires on a target of `target_type`.
    pub fn detect(&self, detector: usize, target_type: usize) -> f64 {
        self.probs[detector * self.n_types + target_type]
    }

    pub fn set(&mut self, detector: usize, target_type: usize, p: f64) -> Result<(), ModelError> {
        check_probability("detection probability", p)?;
        self.probs[detector * self.n_types + target_type] = p;
        Ok(())
    }

    /// Copy with all off-diagonal entries zeroed: the uncoupled baseline in
    /// which each filter treats foreign targets as invisible.
    pub fn zero_confusion(&self) -> Self {
        let mut out = self.clone();
        for j in 0..self.n_types {
            for i in 0..self.n_types {
                if i != j {
                    out.probs[j * self.n_types + i] = 0.0;
                }
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Clutter
// ---------------------------------------------------------------------------

/// Axis-aligned rectangular surveillance region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.x_min < self.x_max && self.y_min < self.y_max {
            Ok(())
        } else {
            Err(ModelError::EmptyRegion)
        }
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn contains(&self, p: &MeasVector) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn contains_position(&self, state: &StateVector) -> bool {
        self.contains(&MeasVector::new(state.x, state.y))
    }
}

/// Uniform Poisson clutter over the surveillance region.
#[derive(Debug, Clone, PartialEq)]
pub struct ClutterModel {
    /// Expected clutter returns per frame for one detector.
    pub rate: f64,
    pub region: Region,
}

impl ClutterModel {
    pub fn new(rate: f64, region: Region) -> Result<Self, ModelError> {
        if rate < 0.0 {
            return Err(ModelError::Negative {
                name: "clutter rate",
                value: rate,
            });
        }
        region.validate()?;
        Ok(Self { rate, region })
    }

    /// Spatial density of a single uniformly distributed return.
    pub fn density(&self) -> f64 {
        1.0 / self.region.area()
    }

    /// Scene clutter intensity at `z`: `rate / area` inside the region, zero
    /// outside.
    pub fn intensity(&self, z: &MeasVector) -> f64 {
        if self.region.contains(z) {
            self.rate * self.density()
        } else {
            0.0
        }
    }
}

// ---------------------------------------------------------------------------
// Birth
// ---------------------------------------------------------------------------

/// Measurement-driven birth parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthModel {
    /// Weight given to each newborn component.
    pub weight: f64,
    /// Covariance of each newborn component.
    pub cov: StateMatrix,
}

impl BirthModel {
    pub fn new(weight: f64, cov: StateMatrix) -> Result<Self, ModelError> {
        if !(weight > 0.0) {
            return Err(ModelError::NonPositive {
                name: "birth weight",
                value: weight,
            });
        }
        if !is_symmetric(&cov, 1e-9) || Cholesky::new(cov).is_none() {
            return Err(ModelError::BadCovariance { name: "birth" });
        }
        Ok(Self { weight, cov })
    }

    pub fn diagonal(weight: f64, diag: [f64; 4]) -> Result<Self, ModelError> {
        Self::new(weight, StateMatrix::from_diagonal(&Vector4::from(diag)))
    }
}

/// One newborn component per measurement, placed at the measured position
/// with zero velocity.
pub fn birth_from_measurements(
    measurements: &[MeasVector],
    birth: &BirthModel,
) -> Vec<GaussianComponent> {
    measurements
        .iter()
        .map(|z| GaussianComponent {
            weight: birth.weight,
            mean: StateVector::new(z.x, z.y, 0.0, 0.0),
            cov: birth.cov,
        })
        .collect()
}
