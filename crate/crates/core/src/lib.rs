//! Multi-type multi-target tracking with Gaussian-mixture PHD filters.
//!
//! The filter propagates one Gaussian-mixture intensity per target type.
//! Detectors confuse types, so each type's update treats the predicted
//! intensities of all other types as an extra clutter field alongside the
//! scene clutter. A matching single-type filter, a scenario simulator, and
//! an optimal-subpattern-assignment scorer round out the toolkit for
//! head-to-head evaluation.

pub mod filter;
pub mod gaussian;
pub mod metrics;
pub mod models;
pub mod scenario;
pub mod sim;

pub use filter::{
    FilterError, FilterParams, FilterState, MeasurementFrame, NtypeFilter, StandardGmPhd,
    StepCounters, StepResult, TypeModels, TypedIntensity,
};
pub use gaussian::{GaussianComponent, MeasVector, NotPositiveDefinite, StateVector};
pub use metrics::{ospa, OspaParams};
pub use models::{
    BirthModel, ClutterModel, DetectionProfile, MeasurementModel, ModelError, MotionModel, Region,
};
pub use scenario::{default_quad, ForeignWire, Scenario, ScenarioError, Trajectory};
pub use sim::{
    run_experiment, simulate_run, FilterMode, MonteCarloReport, SimError, SimulatedRun, TruthState,
};
