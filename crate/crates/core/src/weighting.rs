//! From optimizer endpoints to a weighted posterior ensemble.
//!
//! Each accepted endpoint `θ°` is moved to the centroid `θ*` of its
//! linearized acceptance ellipse and weighted by `p(θ*)·det(JᵀJ)^{-1/2}`, the
//! prior times the ellipse volume. The common volume constant and the kernel
//! normalizer are shared by every particle and vanish on normalization.

use nalgebra::DMatrix;

use crate::ensemble::WeightedEnsemble;
use crate::error::{OmcError, Result};
use crate::kernel::DiscrepancyKernel;
use crate::optimize::{least_squares_step, OptimizationResult};
use crate::prior::Prior;
use crate::types::{Parameters, Particle, SeedVector};

/// Particles whose `ln det(JᵀJ)` falls below this are rejected as
/// near-singular instead of dominating the ensemble.
pub const LOG_DET_FLOOR: f64 = -700.0 * std::f64::consts::LN_10;

/// Outcome of the `θ*` projection.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub theta_star: Parameters,
    /// `θ*` left the prior support and `θ°` was kept.
    pub fallback: bool,
}

/// `θ* = θ° + J†(y − f(θ°))`, with `J† = (JᵀJ)⁻¹Jᵀ` (`J⁻¹` when square).
pub fn project_theta_star(
    theta_opt: &[f64],
    f_at_opt: &[f64],
    jacobian: &DMatrix<f64>,
    y: &[f64],
    prior: &Prior,
) -> Result<Projection> {
    let (d_y, d_theta) = jacobian.shape();
    if d_theta > d_y {
        return Err(OmcError::Underdetermined { d_theta, d_y });
    }
    if theta_opt.len() != d_theta || f_at_opt.len() != d_y || y.len() != d_y {
        return Err(OmcError::DimensionMismatch {
            what: "projection inputs",
            expected: d_y,
            found: y.len(),
        });
    }
    let residual: Vec<f64> = y.iter().zip(f_at_opt).map(|(a, b)| a - b).collect();
    let delta = least_squares_step(jacobian, &residual)
        .ok_or_else(|| OmcError::SingularJacobian(format!("at θ° = {theta_opt:?}")))?;
    let star: Vec<f64> = theta_opt.iter().zip(delta.iter()).map(|(t, d)| t + d).collect();
    if prior.in_support(&star) {
        Ok(Projection {
            theta_star: Parameters(star),
            fallback: false,
        })
    } else {
        log::debug!("θ* = {star:?} outside prior support; keeping θ° = {theta_opt:?}");
        Ok(Projection {
            theta_star: Parameters(theta_opt.to_vec()),
            fallback: true,
        })
    }
}

/// `ln det(JᵀJ)` from the Cholesky factor's diagonal.
pub fn log_det_gram(jacobian: &DMatrix<f64>) -> Result<f64> {
    let gram = jacobian.transpose() * jacobian;
    let chol = gram
        .cholesky()
        .ok_or_else(|| OmcError::SingularJacobian("JᵀJ is not positive definite".into()))?;
    let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    if !log_det.is_finite() {
        return Err(OmcError::SingularJacobian(format!("ln det(JᵀJ) = {log_det}")));
    }
    if log_det < LOG_DET_FLOOR {
        return Err(OmcError::SingularJacobian(format!(
            "near-singular Jacobian, ln det(JᵀJ) = {log_det:.1}"
        )));
    }
    Ok(log_det)
}

/// `ln p(θ*) − ½ ln det(JᵀJ)`; `-inf` outside the prior support.
pub fn log_particle_weight(theta_star: &[f64], jacobian: &DMatrix<f64>, prior: &Prior) -> Result<f64> {
    let log_prior = prior.log_density(theta_star);
    if log_prior == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(log_prior - 0.5 * log_det_gram(jacobian)?)
}

/// `p(θ*) · det(JᵀJ)^{-1/2}`.
pub fn particle_weight(theta_star: &[f64], jacobian: &DMatrix<f64>, prior: &Prior) -> Result<f64> {
    log_particle_weight(theta_star, jacobian, prior).map(f64::exp)
}

/// Turns one optimizer endpoint into a particle, applying the ε rejection
/// rule and the weight formula.
pub fn weigh_particle(
    seed: SeedVector,
    result: OptimizationResult,
    y: &[f64],
    kernel: &DiscrepancyKernel,
    prior: &Prior,
) -> Result<Particle> {
    let mut particle = Particle {
        seed,
        theta_star: result.theta_opt.clone(),
        theta_opt: result.theta_opt,
        f_at_opt: result.f_at_opt,
        discrepancy: result.discrepancy,
        jacobian: result.jacobian,
        log_weight: f64::NEG_INFINITY,
        sim_count: result.sim_count,
        accepted: false,
        projection_fallback: false,
        diagnostic: None,
    };
    if !kernel.accepts(particle.discrepancy) {
        return Ok(particle);
    }
    let Some(jac) = particle.jacobian.as_ref() else {
        particle.diagnostic = Some("no Jacobian at θ°".into());
        return Ok(particle);
    };
    let weighed = project_theta_star(&particle.theta_opt, &particle.f_at_opt, jac, y, prior)
        .and_then(|proj| Ok((log_particle_weight(&proj.theta_star, jac, prior)?, proj)));
    match weighed {
        Ok((log_weight, proj)) if log_weight > f64::NEG_INFINITY => {
            particle.theta_star = proj.theta_star;
            particle.projection_fallback = proj.fallback;
            particle.log_weight = log_weight;
            particle.accepted = true;
        }
        Ok(_) => particle.reject("zero prior density at θ*".to_string()),
        Err(e @ OmcError::Underdetermined { .. }) => return Err(e),
        Err(e) => particle.reject(e.to_string()),
    }
    Ok(particle)
}

/// Weighs every result and normalizes.
pub fn build_ensemble(
    results: Vec<(SeedVector, OptimizationResult)>,
    y: &[f64],
    kernel: &DiscrepancyKernel,
    prior: &Prior,
) -> Result<WeightedEnsemble> {
    if results.is_empty() {
        return Err(OmcError::InvalidArgument("no optimization results".into()));
    }
    let particles = results
        .into_iter()
        .map(|(seed, r)| weigh_particle(seed, r, y, kernel, prior))
        .collect::<Result<Vec<_>>>()?;
    WeightedEnsemble::normalize(particles, kernel.epsilon())
}
