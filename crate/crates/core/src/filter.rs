//! Coupled GM-PHD recursions for N mutually confusable target types, plus the
//! single-type baseline they reduce to.
//!
//! When filtering type `i`, every other type's predicted intensity enters the
//! measurement update as structured clutter: a measurement that is well
//! explained by a foreign type is damped instead of spawning or reinforcing
//! type-`i` components. With all confusion probabilities zero the coupling
//! term vanishes and the recursion is exactly N independent GM-PHD filters.

use crate::gaussian::{
    kalman_gain, symmetrize, CachedMeasGaussian, GainMatrix, GaussianComponent, MeasVector,
    NotPositiveDefinite, StateMatrix, StateVector,
};
use crate::models::{
    birth_from_measurements, BirthModel, ClutterModel, DetectionProfile, MeasurementModel,
    MotionModel,
};
use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gaussian mixture intensity for one target type.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedIntensity {
    pub type_id: usize,
    pub components: Vec<GaussianComponent>,
}

impl TypedIntensity {
    pub fn empty(type_id: usize) -> Self {
        Self {
            type_id,
            components: Vec::new(),
        }
    }

    /// Expected target count: the total mixture mass.
    pub fn expected_cardinality(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }
}

/// Mixture reduction and reporting settings shared by all types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterParams {
    /// Components at or below this weight are dropped before merging.
    pub prune_threshold: f64,
    /// Squared-Mahalanobis radius within which components merge.
    pub merge_threshold: f64,
    /// Mixture weight above which a component is reported as a target.
    pub extract_threshold: f64,
    /// Optional hard cap on components per type after reduction; highest
    /// weights are kept.
    pub max_components: Option<usize>,
    /// Report states from the updated mixture before reduction instead of
    /// after.
    pub extract_before_reduction: bool,
    /// Seed births from the previous frame's measurements instead of the
    /// current frame's.
    pub birth_lag_one: bool,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            prune_threshold: 1.0e-5,
            merge_threshold: 4.0,
            extract_threshold: 0.5,
            max_components: None,
            extract_before_reduction: false,
            birth_lag_one: false,
        }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<(), FilterError> {
        if self.prune_threshold < 0.0 {
            return Err(FilterError::NegativePruneThreshold(self.prune_threshold));
        }
        if !(self.merge_threshold > 0.0) {
            return Err(FilterError::NonPositiveMergeThreshold(self.merge_threshold));
        }
        if !(self.extract_threshold > 0.0 && self.extract_threshold <= 1.0) {
            return Err(FilterError::ExtractThresholdOutOfRange(
                self.extract_threshold,
            ));
        }
        Ok(())
    }
}

/// Per-detector measurement sets for one time step.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementFrame {
    pub time_index: u32,
    pub per_detector: Vec<Vec<MeasVector>>,
}

/// Posterior intensities for all types after a filter step.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub time_index: u32,
    pub intensities: Vec<TypedIntensity>,
    /// Birth source for the next step when births lag one frame.
    pub pending_births: Vec<Vec<MeasVector>>,
}

impl FilterState {
    /// Empty state at time zero, ready to absorb the first frame.
    pub fn initial(n_types: usize) -> Self {
        Self {
            time_index: 0,
            intensities: (0..n_types).map(TypedIntensity::empty).collect(),
            pending_births: Vec::new(),
        }
    }
}

/// Density-evaluation tallies across update passes.
///
/// These count the work that dominates the update stage, so tests can check
/// how cost scales with measurements, components, and types without relying
/// on wall-clock timing.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct StepCounters {
    /// Own-type measurement likelihood evaluations.
    pub likelihood_evals: u64,
    /// Foreign-component density evaluations inside the confusion-clutter sum.
    pub confusion_evals: u64,
    /// Per-component gain and posterior-covariance constructions.
    pub kalman_builds: u64,
}

impl StepCounters {
    /// Total density evaluations in the update stage.
    pub fn update_work(&self) -> u64 {
        self.likelihood_evals + self.confusion_evals
    }
}

impl std::ops::AddAssign for StepCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.likelihood_evals += rhs.likelihood_evals;
        self.confusion_evals += rhs.confusion_evals;
        self.kalman_builds += rhs.kalman_builds;
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("frame at time {got} does not follow filter state at time {expected}")]
    OutOfSequence { expected: u32, got: u32 },
    #[error("frame carries {got} detector streams, filter tracks {expected} types")]
    DetectorCountMismatch { expected: usize, got: usize },
    #[error("filter tracks {expected} types but {got} model bundles were supplied")]
    ModelCountMismatch { expected: usize, got: usize },
    #[error("prune threshold must be non-negative, got {0}")]
    NegativePruneThreshold(f64),
    #[error("merge threshold must be positive, got {0}")]
    NonPositiveMergeThreshold(f64),
    #[error("extract threshold must lie in (0, 1], got {0}")]
    ExtractThresholdOutOfRange(f64),
    #[error(transparent)]
    Covariance(#[from] NotPositiveDefinite),
}

// ---------------------------------------------------------------------------
// Recursion stages
// ---------------------------------------------------------------------------

/// Survival-and-motion prediction with birth components appended after the
/// surviving ones.
pub fn predict(
    prior: &TypedIntensity,
    motion: &MotionModel,
    births: &[GaussianComponent],
) -> TypedIntensity {
    let mut components = Vec::with_capacity(prior.components.len() + births.len());
    for c in &prior.components {
        components.push(GaussianComponent {
            weight: motion.p_survive * c.weight,
            mean: motion.transition * c.mean,
            cov: symmetrize(
                &(motion.process_noise + motion.transition * c.cov * motion.transition.transpose()),
            ),
        });
    }
    components.extend_from_slice(births);
    TypedIntensity {
        type_id: prior.type_id,
        components,
    }
}

/// Intensity that the other types' predicted mixtures contribute at `z` in
/// the measurement space of `target_type`'s detector.
///
/// Each foreign component integrates against the observation likelihood in
/// closed form, giving `p_conf · w · N(z; H m, R + H P Hᵀ)` per component.
pub fn confusion_clutter(
    z: &MeasVector,
    target_type: usize,
    predicted: &[TypedIntensity],
    profile: &DetectionProfile,
    measurement: &MeasurementModel,
) -> Result<f64, NotPositiveDefinite> {
    let mut total = 0.0;
    for intensity in predicted {
        if intensity.type_id == target_type {
            continue;
        }
        let p_conf = profile.detect(target_type, intensity.type_id);
        if p_conf == 0.0 {
            continue;
        }
        for comp in &intensity.components {
            let projected = project_cached(comp, measurement)?;
            total += p_conf * comp.weight * projected.density(z);
        }
    }
    Ok(total)
}

fn project_cached(
    comp: &GaussianComponent,
    measurement: &MeasurementModel,
) -> Result<CachedMeasGaussian, NotPositiveDefinite> {
    let eta = measurement.observation * comp.mean;
    let s = symmetrize(
        &(measurement.noise + measurement.observation * comp.cov * measurement.observation.transpose()),
    );
    CachedMeasGaussian::new(eta, s)
}

struct OwnComponentCache {
    projected: CachedMeasGaussian,
    gain: GainMatrix,
    posterior_cov: StateMatrix,
}

/// Measurement update for `target_type` against its detector's measurement
/// set, with every other type's predicted intensity acting as additional
/// clutter.
///
/// The output keeps one missed-detection copy per predicted component
/// followed by one measurement-updated copy per (measurement, component)
/// pair, `(|Z| + 1) · V` components in total.
pub fn update(
    predicted: &[TypedIntensity],
    target_type: usize,
    measurements: &[MeasVector],
    profile: &DetectionProfile,
    measurement: &MeasurementModel,
    clutter: &ClutterModel,
    counters: &mut StepCounters,
) -> Result<TypedIntensity, NotPositiveDefinite> {
    let own = &predicted[target_type];
    debug_assert_eq!(own.type_id, target_type);
    let p_detect = profile.detect(target_type, target_type);

    let mut own_cache = Vec::with_capacity(own.components.len());
    for comp in &own.components {
        let projected = project_cached(comp, measurement)?;
        let (gain, posterior_cov) =
            kalman_gain(&comp.cov, &measurement.observation, &measurement.noise)?;
        own_cache.push(OwnComponentCache {
            projected,
            gain,
            posterior_cov,
        });
    }
    counters.kalman_builds += own.components.len() as u64;

    let mut foreign_cache = Vec::new();
    for intensity in predicted {
        if intensity.type_id == target_type {
            continue;
        }
        let p_conf = profile.detect(target_type, intensity.type_id);
        if p_conf == 0.0 {
            continue;
        }
        for comp in &intensity.components {
            foreign_cache.push((p_conf * comp.weight, project_cached(comp, measurement)?));
        }
    }

    let mut components =
        Vec::with_capacity((measurements.len() + 1) * own.components.len());
    for comp in &own.components {
        components.push(GaussianComponent {
            weight: (1.0 - p_detect) * comp.weight,
            mean: comp.mean,
            cov: comp.cov,
        });
    }

    let mut numerators = Vec::with_capacity(own.components.len());
    for z in measurements {
        let scene = clutter.intensity(z);
        let mut confusion = 0.0;
        for (scaled_weight, projected) in &foreign_cache {
            confusion += scaled_weight * projected.density(z);
        }
        counters.confusion_evals += foreign_cache.len() as u64;

        numerators.clear();
        let mut own_mass = 0.0;
        for (comp, cache) in own.components.iter().zip(&own_cache) {
            let likelihood = cache.projected.density(z);
            let numerator = p_detect * comp.weight * likelihood;
            numerators.push(numerator);
            own_mass += numerator;
        }
        counters.likelihood_evals += own.components.len() as u64;

        let denominator = scene + confusion + own_mass;
        for ((comp, cache), numerator) in own.components.iter().zip(&own_cache).zip(&numerators) {
            let weight = if denominator > 0.0 {
                numerator / denominator
            } else {
                0.0
            };
            components.push(GaussianComponent {
                weight,
                mean: comp.mean + cache.gain * (z - cache.projected.mean),
                cov: cache.posterior_cov,
            });
        }
    }

    Ok(TypedIntensity {
        type_id: target_type,
        components,
    })
}

/// Weight pruning followed by moment-matched merging.
///
/// Components at or below the prune threshold are dropped. The remaining
/// pool is reduced greedily: the highest-weight survivor absorbs every
/// survivor within the squared-Mahalanobis merge radius measured in the
/// candidate's own covariance, and the group is replaced by its
/// moment-matched single Gaussian. Ties on weight go to the earliest
/// component.
pub fn prune_and_merge(intensity: &TypedIntensity, params: &FilterParams) -> TypedIntensity {
    struct Candidate<'a> {
        comp: &'a GaussianComponent,
        chol: Option<Cholesky<f64, nalgebra::Const<4>>>,
    }

    let pool: Vec<Candidate> = intensity
        .components
        .iter()
        .filter(|c| c.weight > params.prune_threshold)
        .map(|comp| Candidate {
            comp,
            chol: Cholesky::new(comp.cov),
        })
        .collect();

    let mut absorbed = vec![false; pool.len()];
    let mut remaining = pool.len();
    let mut merged = Vec::new();
    while remaining > 0 {
        let mut lead = usize::MAX;
        for (v, c) in pool.iter().enumerate() {
            if !absorbed[v] && (lead == usize::MAX || c.comp.weight > pool[lead].comp.weight) {
                lead = v;
            }
        }
        let lead_mean = pool[lead].comp.mean;

        let mut group = Vec::new();
        for (v, c) in pool.iter().enumerate() {
            if absorbed[v] {
                continue;
            }
            let close = if v == lead {
                true
            } else {
                // Distance measured in the candidate's own covariance; a
                // candidate whose covariance fails to factor is left alone.
                match &c.chol {
                    Some(chol) => {
                        let d = c.comp.mean - lead_mean;
                        chol.solve(&d).dot(&d) <= params.merge_threshold
                    }
                    None => false,
                }
            };
            if close {
                group.push(v);
            }
        }

        let weight: f64 = group.iter().map(|&v| pool[v].comp.weight).sum();
        let mut mean = StateVector::zeros();
        for &v in &group {
            mean += pool[v].comp.weight * pool[v].comp.mean;
        }
        mean /= weight;
        let mut cov = StateMatrix::zeros();
        for &v in &group {
            let spread = mean - pool[v].comp.mean;
            cov += pool[v].comp.weight * (pool[v].comp.cov + spread * spread.transpose());
        }
        cov = symmetrize(&(cov / weight));

        merged.push(GaussianComponent { weight, mean, cov });
        for &v in &group {
            absorbed[v] = true;
        }
        remaining -= group.len();
    }

    if let Some(cap) = params.max_components {
        if merged.len() > cap {
            let mut order: Vec<usize> = (0..merged.len()).collect();
            order.sort_by(|&a, &b| {
                merged[b]
                    .weight
                    .partial_cmp(&merged[a].weight)
                    .unwrap()
                    .then(a.cmp(&b))
            });
            order.truncate(cap);
            order.sort_unstable();
            merged = order.into_iter().map(|i| merged[i].clone()).collect();
        }
    }

    TypedIntensity {
        type_id: intensity.type_id,
        components: merged,
    }
}

/// Means of components whose weight clears the reporting threshold, in
/// component order. Each qualifying component is reported once.
pub fn extract_states(intensity: &TypedIntensity, threshold: f64) -> Vec<StateVector> {
    intensity
        .components
        .iter()
        .filter(|c| c.weight > threshold)
        .map(|c| c.mean)
        .collect()
}

// ---------------------------------------------------------------------------
// The coupled filter
// ---------------------------------------------------------------------------

/// Models for one target type and its detector.
#[derive(Debug, Clone)]
pub struct TypeModels {
    pub motion: MotionModel,
    pub measurement: MeasurementModel,
    pub clutter: ClutterModel,
    pub birth: BirthModel,
}

/// N coupled GM-PHD filters, one per target type, sharing a detection
/// profile.
#[derive(Debug, Clone)]
pub struct NtypeFilter {
    profile: DetectionProfile,
    per_type: Vec<TypeModels>,
    params: FilterParams,
}

/// What one filter step produced.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub state: FilterState,
    /// Reported target states per type.
    pub extracted: Vec<Vec<StateVector>>,
    pub counters: StepCounters,
}

impl NtypeFilter {
    pub fn new(
        profile: DetectionProfile,
        per_type: Vec<TypeModels>,
        params: FilterParams,
    ) -> Result<Self, FilterError> {
        params.validate()?;
        if per_type.len() != profile.n_types() {
            return Err(FilterError::ModelCountMismatch {
                expected: profile.n_types(),
                got: per_type.len(),
            });
        }
        Ok(Self {
            profile,
            per_type,
            params,
        })
    }

    pub fn n_types(&self) -> usize {
        self.per_type.len()
    }

    pub fn params(&self) -> &FilterParams {
        &self.params
    }

    pub fn profile(&self) -> &DetectionProfile {
        &self.profile
    }

    pub fn initial_state(&self) -> FilterState {
        FilterState::initial(self.n_types())
    }

    /// Advances the posterior by one frame: births and prediction for every
    /// type first, then each type's update against its own detector stream
    /// with all other types' predictions acting as clutter, then reduction
    /// and state extraction.
    pub fn step(
        &self,
        state: &FilterState,
        frame: &MeasurementFrame,
    ) -> Result<StepResult, FilterError> {
        if frame.time_index != state.time_index + 1 {
            return Err(FilterError::OutOfSequence {
                expected: state.time_index + 1,
                got: frame.time_index,
            });
        }
        if frame.per_detector.len() != self.n_types() {
            return Err(FilterError::DetectorCountMismatch {
                expected: self.n_types(),
                got: frame.per_detector.len(),
            });
        }

        let empty: Vec<MeasVector> = Vec::new();
        let birth_source = |i: usize| -> &[MeasVector] {
            if self.params.birth_lag_one {
                state.pending_births.get(i).unwrap_or(&empty)
            } else {
                &frame.per_detector[i]
            }
        };

        let mut predicted = Vec::with_capacity(self.n_types());
        for (i, models) in self.per_type.iter().enumerate() {
            let births = birth_from_measurements(birth_source(i), &models.birth);
            predicted.push(predict(&state.intensities[i], &models.motion, &births));
        }

        let mut counters = StepCounters::default();
        let mut intensities = Vec::with_capacity(self.n_types());
        let mut extracted = Vec::with_capacity(self.n_types());
        for (i, models) in self.per_type.iter().enumerate() {
            let updated = update(
                &predicted,
                i,
                &frame.per_detector[i],
                &self.profile,
                &models.measurement,
                &models.clutter,
                &mut counters,
            )?;
            let reduced = prune_and_merge(&updated, &self.params);
            let report_source = if self.params.extract_before_reduction {
                &updated
            } else {
                &reduced
            };
            extracted.push(extract_states(report_source, self.params.extract_threshold));
            intensities.push(reduced);
        }

        let pending_births = if self.params.birth_lag_one {
            frame.per_detector.clone()
        } else {
            Vec::new()
        };

        Ok(StepResult {
            state: FilterState {
                time_index: frame.time_index,
                intensities,
                pending_births,
            },
            extracted,
            counters,
        })
    }
}

// ---------------------------------------------------------------------------
// Single-type baseline
// ---------------------------------------------------------------------------

/// Classic single-type GM-PHD filter over one detector stream.
///
/// Written directly from the standard recursion rather than by delegating to
/// the coupled filter, so the two implementations can be checked against
/// each other.
#[derive(Debug, Clone)]
pub struct StandardGmPhd {
    pub models: TypeModels,
    pub p_detect: f64,
    pub params: FilterParams,
}

impl StandardGmPhd {
    pub fn new(models: TypeModels, p_detect: f64, params: FilterParams) -> Result<Self, FilterError> {
        params.validate()?;
        Ok(Self {
            models,
            p_detect,
            params,
        })
    }

    /// One predict-update-reduce pass. Births are seeded from the same
    /// frame's measurements.
    pub fn step(
        &self,
        prior: &TypedIntensity,
        measurements: &[MeasVector],
    ) -> Result<(TypedIntensity, Vec<StateVector>), FilterError> {
        let births = birth_from_measurements(measurements, &self.models.birth);
        let predicted = predict(prior, &self.models.motion, &births);

        let mut components =
            Vec::with_capacity((measurements.len() + 1) * predicted.components.len());
        for comp in &predicted.components {
            components.push(GaussianComponent {
                weight: (1.0 - self.p_detect) * comp.weight,
                mean: comp.mean,
                cov: comp.cov,
            });
        }
        for z in measurements {
            let mut terms = Vec::with_capacity(predicted.components.len());
            let mut mass = 0.0;
            for comp in &predicted.components {
                let likelihood = crate::gaussian::marginal_likelihood(
                    z,
                    comp,
                    &self.models.measurement.observation,
                    &self.models.measurement.noise,
                )?;
                let numerator = self.p_detect * comp.weight * likelihood;
                let (gain, posterior_cov) = kalman_gain(
                    &comp.cov,
                    &self.models.measurement.observation,
                    &self.models.measurement.noise,
                )?;
                let mean = comp.mean
                    + gain * (z - self.models.measurement.observation * comp.mean);
                terms.push((numerator, mean, posterior_cov));
                mass += numerator;
            }
            let denominator = self.models.clutter.intensity(z) + mass;
            for (numerator, mean, cov) in terms {
                let weight = if denominator > 0.0 {
                    numerator / denominator
                } else {
                    0.0
                };
                components.push(GaussianComponent { weight, mean, cov });
            }
        }

        let updated = TypedIntensity {
            type_id: prior.type_id,
            components,
        };
        let reduced = prune_and_merge(&updated, &self.params);
        let extracted = extract_states(&reduced, self.params.extract_threshold);
        Ok((reduced, extracted))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_cv_motion, Region};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use nalgebra::{Matrix4, Vector2, Vector4};

    fn test_region() -> Region {
        Region {
            x_min: -1000.0,
            x_max: 1000.0,
            y_min: -1000.0,
            y_max: 1000.0,
        }
    }

    fn test_models(rate: f64) -> TypeModels {
        TypeModels {
            motion: make_cv_motion(1.0, 5.0, 0.99).unwrap(),
            measurement: MeasurementModel::position_sensor(6.0).unwrap(),
            clutter: ClutterModel::new(rate, test_region()).unwrap(),
            birth: BirthModel::diagonal(3.0e-6, [200.0, 200.0, 100.0, 100.0]).unwrap(),
        }
    }

    fn component(weight: f64, mean: [f64; 4]) -> GaussianComponent {
        GaussianComponent {
            weight,
            mean: Vector4::from(mean),
            cov: Matrix4::identity(),
        }
    }

    #[test]
    fn predict_moves_position_by_velocity() {
        let prior = TypedIntensity {
            type_id: 0,
            components: vec![component(1.0, [1.0, 2.0, 3.0, 4.0])],
        };
        let motion = make_cv_motion(1.0, 0.0, 1.0).unwrap();
        let out = predict(&prior, &motion, &[]);
        assert_abs_diff_eq!(out.components[0].mean, Vector4::new(4.0, 6.0, 3.0, 4.0));
    }

    #[test]
    fn predict_scales_weights_and_propagates_covariance() {
        let prior = TypedIntensity {
            type_id: 0,
            components: vec![component(1.0, [0.0; 4])],
        };
        let motion = make_cv_motion(1.0, 5.0, 0.99).unwrap();
        let out = predict(&prior, &motion, &[]);
        assert_relative_eq!(out.components[0].weight, 0.99);
        // Q + F I Fᵀ for a unit time step.
        let f = motion.transition;
        let expected = motion.process_noise + f * Matrix4::identity() * f.transpose();
        assert_relative_eq!(out.components[0].cov, expected, max_relative = 1e-12);
    }

    #[test]
    fn predict_appends_births_and_conserves_mass() {
        let prior = TypedIntensity {
            type_id: 0,
            components: vec![component(0.7, [0.0; 4]), component(0.4, [10.0, 0.0, 0.0, 0.0])],
        };
        let motion = make_cv_motion(1.0, 5.0, 0.9).unwrap();
        let births = vec![component(3.0e-6, [5.0, 5.0, 0.0, 0.0])];
        let out = predict(&prior, &motion, &births);
        assert_eq!(out.components.len(), 3);
        assert_abs_diff_eq!(out.components[2].mean, Vector4::new(5.0, 5.0, 0.0, 0.0));
        let expected_mass = 0.9 * (0.7 + 0.4) + 3.0e-6;
        assert_abs_diff_eq!(out.expected_cardinality(), expected_mass, epsilon = 1e-12);
    }

    #[test]
    fn confusion_clutter_zero_without_cross_terms() {
        let profile = DetectionProfile::uniform_confusion(&[0.9, 0.9], 0.0).unwrap();
        let predicted = vec![
            TypedIntensity {
                type_id: 0,
                components: vec![component(1.0, [0.0; 4])],
            },
            TypedIntensity {
                type_id: 1,
                components: vec![component(1.0, [10.0, 10.0, 0.0, 0.0])],
            },
        ];
        let measurement = MeasurementModel::position_sensor(6.0).unwrap();
        let c = confusion_clutter(
            &Vector2::new(10.0, 10.0),
            0,
            &predicted,
            &profile,
            &measurement,
        )
        .unwrap();
        assert_abs_diff_eq!(c, 0.0);
    }

    #[test]
    fn confusion_clutter_single_foreign_component_by_hand() {
        // One foreign unit-weight component observed through identity models:
        // the contribution at its projected mean is p_conf / (2 pi sqrt(det S))
        // with S = 2 I, i.e. 0.6 / (4 pi).
        let profile = DetectionProfile::new(&[vec![0.9, 0.6], vec![0.6, 0.9]]).unwrap();
        let predicted = vec![
            TypedIntensity::empty(0),
            TypedIntensity {
                type_id: 1,
                components: vec![component(1.0, [0.0; 4])],
            },
        ];
        let measurement = MeasurementModel {
            observation: crate::gaussian::ObsMatrix::new(
                1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0,
            ),
            noise: nalgebra::Matrix2::identity(),
        };
        let c = confusion_clutter(&Vector2::zeros(), 0, &predicted, &profile, &measurement)
            .unwrap();
        assert_relative_eq!(
            c,
            0.6 / (4.0 * std::f64::consts::PI),
            max_relative = 1e-12
        );
    }

    #[test]
    fn update_empty_frame_keeps_scaled_missed_mass() {
        let profile = DetectionProfile::uniform_confusion(&[0.9, 0.9], 0.0).unwrap();
        let predicted = vec![
            TypedIntensity {
                type_id: 0,
                components: vec![component(1.0, [0.0; 4])],
            },
            TypedIntensity::empty(1),
        ];
        let models = test_models(10.0);
        let mut counters = StepCounters::default();
        let out = update(
            &predicted,
            0,
            &[],
            &profile,
            &models.measurement,
            &models.clutter,
            &mut counters,
        )
        .unwrap();
        assert_eq!(out.components.len(), 1);
        assert_abs_diff_eq!(out.expected_cardinality(), 0.1, epsilon = 1e-12);
        assert_eq!(counters.likelihood_evals, 0);
    }

    #[test]
    fn update_component_count_is_frame_size_plus_one_per_component() {
        let profile = DetectionProfile::uniform_confusion(&[0.9, 0.9], 0.3).unwrap();
        let predicted = vec![
            TypedIntensity {
                type_id: 0,
                components: vec![
                    component(0.5, [0.0; 4]),
                    component(0.5, [100.0, 0.0, 0.0, 0.0]),
                    component(0.5, [0.0, 100.0, 0.0, 0.0]),
                ],
            },
            TypedIntensity {
                type_id: 1,
                components: vec![component(1.0, [50.0, 50.0, 0.0, 0.0])],
            },
        ];
        let models = test_models(10.0);
        let mut counters = StepCounters::default();
        let measurements = vec![Vector2::new(0.0, 0.0), Vector2::new(100.0, 0.0)];
        let out = update(
            &predicted,
            0,
            &measurements,
            &profile,
            &models.measurement,
            &models.clutter,
            &mut counters,
        )
        .unwrap();
        assert_eq!(out.components.len(), (measurements.len() + 1) * 3);
        assert_eq!(counters.likelihood_evals, 2 * 3);
        assert_eq!(counters.confusion_evals, 2 * 1);
        assert_eq!(counters.kalman_builds, 3);
    }

    #[test]
    fn update_clutter_free_single_component_takes_full_weight() {
        // No scene clutter, no confusion, unit detection: the single
        // measurement copy carries weight q / q = 1 regardless of q.
        let profile = DetectionProfile::uniform_confusion(&[1.0, 1.0], 0.0).unwrap();
        let predicted = vec![
            TypedIntensity {
                type_id: 0,
                components: vec![component(1.0, [0.0; 4])],
            },
            TypedIntensity::empty(1),
        ];
        let models = test_models(0.0);
        let mut counters = StepCounters::default();
        let out = update(
            &predicted,
            0,
            &[Vector2::new(1.0, -1.0)],
            &profile,
            &models.measurement,
            &models.clutter,
            &mut counters,
        )
        .unwrap();
        // Missed copy carries zero weight at unit detection probability.
        assert_abs_diff_eq!(out.components[0].weight, 0.0);
        assert_relative_eq!(out.components[1].weight, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn update_scalar_weight_matches_hand_normalization() {
        let p_detect = 0.9;
        let profile = DetectionProfile::uniform_confusion(&[p_detect, p_detect], 0.0).unwrap();
        let comp = component(0.8, [3.0, -2.0, 0.0, 0.0]);
        let predicted = vec![
            TypedIntensity {
                type_id: 0,
                components: vec![comp.clone()],
            },
            TypedIntensity::empty(1),
        ];
        let models = test_models(10.0);
        let z = Vector2::new(5.0, -3.0);
        let q = crate::gaussian::marginal_likelihood(
            &z,
            &comp,
            &models.measurement.observation,
            &models.measurement.noise,
        )
        .unwrap();
        let scene = models.clutter.intensity(&z);
        let expected = p_detect * 0.8 * q / (scene + p_detect * 0.8 * q);

        let mut counters = StepCounters::default();
        let out = update(
            &predicted,
            0,
            &[z],
            &profile,
            &models.measurement,
            &models.clutter,
            &mut counters,
        )
        .unwrap();
        assert_relative_eq!(out.components[1].weight, expected, max_relative = 1e-12);
    }

    #[test]
    fn update_confusion_damps_weights_monotonically() {
        // The same measurement set filtered under rising confusion must give
        // strictly smaller updated weights when a foreign component sits at
        // the measurement.
        let models = test_models(10.0);
        let predicted = vec![
            TypedIntensity {
                type_id: 0,
                components: vec![component(0.9, [0.0; 4])],
            },
            TypedIntensity {
                type_id: 1,
                components: vec![component(1.0, [0.0; 4])],
            },
        ];
        let z = Vector2::new(0.5, 0.5);
        let mut last = f64::INFINITY;
        for confusion in [0.0, 0.3, 0.6, 0.9] {
            let profile = DetectionProfile::uniform_confusion(&[0.9, 0.9], confusion).unwrap();
            let mut counters = StepCounters::default();
            let out = update(
                &predicted,
                0,
                &[z],
                &profile,
                &models.measurement,
                &models.clutter,
                &mut counters,
            )
            .unwrap();
            let updated_weight = out.components[1].weight;
            assert!(updated_weight < last);
            last = updated_weight;
        }
    }

    #[test]
    fn prune_drops_light_components() {
        let intensity = TypedIntensity {
            type_id: 0,
            components: vec![
                component(1.0e-6, [0.0; 4]),
                component(0.5, [50.0, 0.0, 0.0, 0.0]),
            ],
        };
        let out = prune_and_merge(&intensity, &FilterParams::default());
        assert_eq!(out.components.len(), 1);
        assert_abs_diff_eq!(out.components[0].weight, 0.5);
    }

    #[test]
    fn merge_combines_coincident_components() {
        let intensity = TypedIntensity {
            type_id: 0,
            components: vec![component(0.4, [0.0; 4]), component(0.2, [0.0; 4])],
        };
        let out = prune_and_merge(&intensity, &FilterParams::default());
        assert_eq!(out.components.len(), 1);
        assert_abs_diff_eq!(out.components[0].weight, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(out.components[0].mean, Vector4::zeros());
        // Coincident means add no spread.
        assert_abs_diff_eq!(out.components[0].cov, Matrix4::identity(), epsilon = 1e-12);
    }

    #[test]
    fn merge_keeps_distant_components_apart() {
        let intensity = TypedIntensity {
            type_id: 0,
            components: vec![
                component(0.5, [0.0; 4]),
                component(0.4, [100.0, 0.0, 0.0, 0.0]),
            ],
        };
        let out = prune_and_merge(&intensity, &FilterParams::default());
        assert_eq!(out.components.len(), 2);
    }

    #[test]
    fn merge_conserves_mass_and_matches_moments() {
        let a = GaussianComponent {
            weight: 0.6,
            mean: Vector4::new(0.0, 0.0, 1.0, 0.0),
            cov: Matrix4::identity() * 2.0,
        };
        let b = GaussianComponent {
            weight: 0.3,
            mean: Vector4::new(1.0, 1.0, 0.0, 1.0),
            cov: Matrix4::identity(),
        };
        let intensity = TypedIntensity {
            type_id: 0,
            components: vec![a.clone(), b.clone()],
        };
        let out = prune_and_merge(&intensity, &FilterParams::default());
        assert_eq!(out.components.len(), 1);
        let merged = &out.components[0];
        assert_abs_diff_eq!(merged.weight, 0.9, epsilon = 1e-12);
        let expected_mean = (a.weight * a.mean + b.weight * b.mean) / 0.9;
        assert_relative_eq!(merged.mean, expected_mean, max_relative = 1e-12);
        let mut expected_cov = Matrix4::zeros();
        for c in [&a, &b] {
            let d = expected_mean - c.mean;
            expected_cov += c.weight * (c.cov + d * d.transpose());
        }
        expected_cov /= 0.9;
        assert_relative_eq!(merged.cov, expected_cov, max_relative = 1e-12);
    }

    #[test]
    fn merge_cap_keeps_heaviest_components() {
        let intensity = TypedIntensity {
            type_id: 0,
            components: vec![
                component(0.2, [0.0; 4]),
                component(0.9, [100.0, 0.0, 0.0, 0.0]),
                component(0.5, [0.0, 100.0, 0.0, 0.0]),
            ],
        };
        let params = FilterParams {
            max_components: Some(2),
            ..FilterParams::default()
        };
        let out = prune_and_merge(&intensity, &params);
        assert_eq!(out.components.len(), 2);
        let weights: Vec<f64> = out.components.iter().map(|c| c.weight).collect();
        assert!(weights.contains(&0.9) && weights.contains(&0.5));
    }

    #[test]
    fn extract_reports_heavy_components_once() {
        let intensity = TypedIntensity {
            type_id: 0,
            components: vec![
                component(0.4, [0.0; 4]),
                component(0.8, [10.0, 0.0, 0.0, 0.0]),
                component(1.7, [20.0, 0.0, 0.0, 0.0]),
            ],
        };
        let states = extract_states(&intensity, 0.5);
        assert_eq!(states.len(), 2);
        assert_abs_diff_eq!(states[0], Vector4::new(10.0, 0.0, 0.0, 0.0));
        assert_abs_diff_eq!(states[1], Vector4::new(20.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn step_rejects_out_of_sequence_frames() {
        let profile = DetectionProfile::uniform_confusion(&[0.9, 0.9], 0.0).unwrap();
        let filter = NtypeFilter::new(
            profile,
            vec![test_models(10.0), test_models(10.0)],
            FilterParams::default(),
        )
        .unwrap();
        let state = filter.initial_state();
        let frame = MeasurementFrame {
            time_index: 2,
            per_detector: vec![vec![], vec![]],
        };
        assert!(matches!(
            filter.step(&state, &frame),
            Err(FilterError::OutOfSequence {
                expected: 1,
                got: 2
            })
        ));
    }

    #[test]
    fn step_rejects_wrong_detector_count() {
        let profile = DetectionProfile::uniform_confusion(&[0.9, 0.9], 0.0).unwrap();
        let filter = NtypeFilter::new(
            profile,
            vec![test_models(10.0), test_models(10.0)],
            FilterParams::default(),
        )
        .unwrap();
        let frame = MeasurementFrame {
            time_index: 1,
            per_detector: vec![vec![]],
        };
        assert!(matches!(
            filter.step(&filter.initial_state(), &frame),
            Err(FilterError::DetectorCountMismatch { .. })
        ));
    }

    #[test]
    fn params_validation_catches_bad_thresholds() {
        let bad_prune = FilterParams {
            prune_threshold: -1.0,
            ..FilterParams::default()
        };
        assert!(matches!(
            bad_prune.validate(),
            Err(FilterError::NegativePruneThreshold(_))
        ));
        let bad_merge = FilterParams {
            merge_threshold: 0.0,
            ..FilterParams::default()
        };
        assert!(matches!(
            bad_merge.validate(),
            Err(FilterError::NonPositiveMergeThreshold(_))
        ));
        let bad_extract = FilterParams {
            extract_threshold: 1.5,
            ..FilterParams::default()
        };
        assert!(matches!(
            bad_extract.validate(),
            Err(FilterError::ExtractThresholdOutOfRange(_))
        ));
    }

    #[test]
    fn zero_confusion_step_matches_independent_baselines() {
        let profile = DetectionProfile::uniform_confusion(&[0.9, 0.92], 0.0).unwrap();
        let params = FilterParams::default();
        let models = vec![test_models(10.0), test_models(10.0)];
        let filter = NtypeFilter::new(profile, models.clone(), params).unwrap();
        let baselines: Vec<StandardGmPhd> = models
            .iter()
            .zip([0.9, 0.92])
            .map(|(m, p)| StandardGmPhd::new(m.clone(), p, params).unwrap())
            .collect();

        let frames = vec![
            vec![vec![Vector2::new(0.0, 0.0)], vec![Vector2::new(50.0, 50.0)]],
            vec![
                vec![Vector2::new(1.0, 0.5), Vector2::new(-200.0, 300.0)],
                vec![Vector2::new(51.0, 50.5)],
            ],
            vec![vec![Vector2::new(2.0, 1.0)], vec![]],
        ];

        let mut state = filter.initial_state();
        let mut base_states = vec![TypedIntensity::empty(0), TypedIntensity::empty(1)];
        for (k, per_detector) in frames.iter().enumerate() {
            let frame = MeasurementFrame {
                time_index: k as u32 + 1,
                per_detector: per_detector.clone(),
            };
            state = filter.step(&state, &frame).unwrap().state;
            for (i, baseline) in baselines.iter().enumerate() {
                let (next, _) = baseline.step(&base_states[i], &per_detector[i]).unwrap();
                base_states[i] = next;
            }
            for i in 0..2 {
                let coupled = &state.intensities[i];
                let independent = &base_states[i];
                assert_eq!(coupled.components.len(), independent.components.len());
                for (a, b) in coupled.components.iter().zip(&independent.components) {
                    assert_abs_diff_eq!(a.weight, b.weight, epsilon = 1e-9);
                    assert_abs_diff_eq!(a.mean, b.mean, epsilon = 1e-9);
                    assert_abs_diff_eq!(a.cov, b.cov, epsilon = 1e-9);
                }
            }
        }
    }
}
