//! Gaussian density primitives shared by the filter recursions.
//!
//! Every density is evaluated through a Cholesky factorization; covariance
//! inverses are never formed explicitly. Densities are accumulated in log
//! space and exponentiated at the end, so small likelihoods stay well away
//! from underflow until the final `exp`.

use nalgebra::{Cholesky, Const, SMatrix, SVector};
use thiserror::Error;

/// Target state `[px, py, vx, vy]`.
pub type StateVector = SVector<f64, 4>;
/// Planar position measurement `[zx, zy]`.
pub type MeasVector = SVector<f64, 2>;
/// State-space covariance.
pub type StateMatrix = SMatrix<f64, 4, 4>;
/// Measurement-space covariance.
pub type MeasMatrix = SMatrix<f64, 2, 2>;
/// Observation matrix mapping state space to measurement space.
pub type ObsMatrix = SMatrix<f64, 2, 4>;
/// Kalman gain mapping innovations back to state space.
pub type GainMatrix = SMatrix<f64, 4, 2>;

/// A covariance failed to factor where a positive-definite matrix is required.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("matrix `{matrix}` is not positive definite")]
pub struct NotPositiveDefinite {
    /// Name of the matrix that failed to factor.
    pub matrix: &'static str,
}

/// One weighted term of a Gaussian mixture intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: StateVector,
    pub cov: StateMatrix,
}

/// Replaces `m` with its symmetric part `(m + mᵀ) / 2`.
///
/// Covariance propagation accumulates asymmetry of the order of machine
/// epsilon per step; re-symmetrizing after every construction keeps the
/// factorizations stable over long runs.
pub fn symmetrize<const D: usize>(m: &SMatrix<f64, D, D>) -> SMatrix<f64, D, D> {
    (m + m.transpose()) * 0.5
}

/// True when `m` equals its transpose to `rel_tol` relative to the largest
/// absolute entry.
pub fn is_symmetric<const D: usize>(m: &SMatrix<f64, D, D>, rel_tol: f64) -> bool {
    let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
    let mut worst = 0.0_f64;
    for r in 0..D {
        for c in (r + 1)..D {
            worst = worst.max((m[(r, c)] - m[(c, r)]).abs());
        }
    }
    worst <= rel_tol * scale
}

fn log_density_from_cholesky<const D: usize>(
    chol: &Cholesky<f64, Const<D>>,
    diff: &SVector<f64, D>,
) -> f64 {
    let maha = chol.solve(diff).dot(diff);
    let d = D as f64;
    -0.5 * (d * (2.0 * std::f64::consts::PI).ln() + chol.ln_determinant() + maha)
}

/// Log of the multivariate normal density `N(x; mean, cov)`.
pub fn log_gaussian_pdf<const D: usize>(
    x: &SVector<f64, D>,
    mean: &SVector<f64, D>,
    cov: &SMatrix<f64, D, D>,
) -> Result<f64, NotPositiveDefinite> {
    let chol = Cholesky::new(*cov).ok_or(NotPositiveDefinite {
        matrix: "density covariance",
    })?;
    Ok(log_density_from_cholesky(&chol, &(x - mean)))
}

/// Multivariate normal density `N(x; mean, cov)`.
pub fn gaussian_pdf<const D: usize>(
    x: &SVector<f64, D>,
    mean: &SVector<f64, D>,
    cov: &SMatrix<f64, D, D>,
) -> Result<f64, NotPositiveDefinite> {
    log_gaussian_pdf(x, mean, cov).map(f64::exp)
}

/// Predicted measurement mean and innovation covariance of a component under
/// the observation model: `(H m, R + H P Hᵀ)`.
pub fn project_component(
    comp: &GaussianComponent,
    obs: &ObsMatrix,
    noise: &MeasMatrix,
) -> (MeasVector, MeasMatrix) {
    let eta = obs * comp.mean;
    let s = symmetrize(&(noise + obs * comp.cov * obs.transpose()));
    (eta, s)
}

/// Likelihood of measurement `z` under a state component pushed through the
/// observation model: `N(z; H m, R + H P Hᵀ)`.
pub fn marginal_likelihood(
    z: &MeasVector,
    comp: &GaussianComponent,
    obs: &ObsMatrix,
    noise: &MeasMatrix,
) -> Result<f64, NotPositiveDefinite> {
    let (eta, s) = project_component(comp, obs, noise);
    gaussian_pdf(z, &eta, &s).map_err(|_| NotPositiveDefinite {
        matrix: "innovation covariance",
    })
}

/// Kalman gain and posterior covariance for a prior covariance `P`.
///
/// Returns `(K, (I - K H) P)` with the posterior re-symmetrized. The gain is
/// obtained by solving against the factored innovation covariance.
pub fn kalman_gain(
    prior_cov: &StateMatrix,
    obs: &ObsMatrix,
    noise: &MeasMatrix,
) -> Result<(GainMatrix, StateMatrix), NotPositiveDefinite> {
    let s = symmetrize(&(noise + obs * prior_cov * obs.transpose()));
    let chol = Cholesky::new(s).ok_or(NotPositiveDefinite {
        matrix: "innovation covariance",
    })?;
    // K = P Hᵀ S⁻¹, taken as the transpose of S⁻¹ (H Pᵀ).
    let gain = chol.solve(&(obs * prior_cov.transpose())).transpose();
    let posterior = symmetrize(&((StateMatrix::identity() - gain * obs) * prior_cov));
    Ok((gain, posterior))
}

/// Measurement-space Gaussian with a cached factorization, for evaluating the
/// same component against many measurements.
#[derive(Debug, Clone)]
pub struct CachedMeasGaussian {
    pub mean: MeasVector,
    chol: Cholesky<f64, Const<2>>,
    log_norm: f64,
}

impl CachedMeasGaussian {
    pub fn new(mean: MeasVector, cov: MeasMatrix) -> Result<Self, NotPositiveDefinite> {
        let chol = Cholesky::new(cov).ok_or(NotPositiveDefinite {
            matrix: "innovation covariance",
        })?;
        let log_norm = 0.5 * (2.0 * (2.0 * std::f64::consts::PI).ln() + chol.ln_determinant());
        Ok(Self {
            mean,
            chol,
            log_norm,
        })
    }

    /// Density at `z`, reusing the stored factorization.
    pub fn density(&self, z: &MeasVector) -> f64 {
        let diff = z - self.mean;
        let maha = self.chol.solve(&diff).dot(&diff);
        (-0.5 * maha - self.log_norm).exp()
    }
}
