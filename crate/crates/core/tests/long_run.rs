//! The coupled filter stays numerically healthy over a long dense run.

use nalgebra::Cholesky;
use ntype_gmphd::gaussian::is_symmetric;
use ntype_gmphd::scenario::default_quad;
use ntype_gmphd::sim::simulate_run;

#[test]
fn hundred_step_quad_run_stays_well_conditioned() {
    let mut scenario = default_quad();
    scenario.horizon = 100;
    let sim = simulate_run(&scenario, 0);
    let filter = scenario.ntype_filter().unwrap();

    let mut state = filter.initial_state();
    for sim_frame in &sim.frames {
        let result = filter.step(&state, &sim_frame.frame).unwrap();
        state = result.state;
        let step = state.time_index;

        let mut pooled_extracted = 0;
        for (intensity, extracted) in state.intensities.iter().zip(&result.extracted) {
            assert!(
                intensity.components.len() < 1500,
                "step {step}: mixture grew to {} components",
                intensity.components.len()
            );
            for comp in &intensity.components {
                assert!(comp.weight.is_finite() && comp.weight >= 0.0);
                assert!(
                    is_symmetric(&comp.cov, 1e-9),
                    "step {step}: covariance lost symmetry"
                );
                assert!(
                    Cholesky::new(comp.cov).is_some(),
                    "step {step}: covariance lost positive definiteness"
                );
            }
            let mass = intensity.expected_cardinality();
            assert!(
                mass.is_finite() && mass < 64.0,
                "step {step}: weight mass {mass} ran away"
            );
            pooled_extracted += extracted.len();
        }

        if step > 10 {
            assert!(
                (10..=22).contains(&pooled_extracted),
                "step {step}: reported {pooled_extracted} targets for a population of 16"
            );
        }
    }
}
