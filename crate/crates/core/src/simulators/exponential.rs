use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_dims, exp_quantile, Simulator};
use crate::error::{OmcError, Result};
use crate::prior::{Marginal, Prior};
use crate::types::{Parameters, SeedVector, Statistics};

/// Hyperparameters of the exponential-rate experiment; prior
/// `Gamma(alpha, beta)` with `beta` a rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ExponentialOptions {
    pub alpha: f64,
    pub beta: f64,
    pub m: usize,
    pub observed: f64,
}

impl Default for ExponentialOptions {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            beta: 1.0,
            m: 2,
            observed: 10.0,
        }
    }
}

/// Mean of `M` draws from `Exp(θ)`: `f(θ, u) = R(u)/θ`.
#[derive(Debug, Clone)]
pub struct Exponential {
    options: ExponentialOptions,
    prior: Prior,
    observed: Statistics,
}

impl Exponential {
    pub fn new(options: ExponentialOptions) -> Result<Self> {
        if options.m == 0 || !(options.alpha > 0.0 && options.beta > 0.0) || !(options.observed > 0.0) {
            return Err(OmcError::InvalidArgument(format!("invalid exponential options {options:?}")));
        }
        let prior = Prior::independent(vec![Marginal::Gamma {
            shape: options.alpha,
            rate: options.beta,
        }]);
        let observed = Statistics(vec![options.observed]);
        Ok(Self { options, prior, observed })
    }

    pub fn options(&self) -> &ExponentialOptions {
        &self.options
    }

    /// `R(u) = Σ −ln(1 − u_m) / M`.
    pub fn random_effect(&self, u: &SeedVector) -> f64 {
        let sum: f64 = (0..u.len()).map(|i| exp_quantile(u.clipped(i))).sum();
        sum / u.len() as f64
    }
}

impl Simulator for Exponential {
    fn name(&self) -> &'static str {
        "exponential"
    }
    fn d_theta(&self) -> usize {
        1
    }
    fn d_y(&self) -> usize {
        1
    }
    fn d_u(&self) -> usize {
        self.options.m
    }

    fn forward(&self, theta: &[f64], u: &SeedVector) -> Result<Statistics> {
        check_dims(self, theta, u)?;
        if !(theta[0] > 0.0) {
            return Err(OmcError::OutsideSupport {
                simulator: self.name(),
                theta: theta.to_vec(),
            });
        }
        Ok(Statistics(vec![self.random_effect(u) / theta[0]]))
    }

    fn prior(&self) -> &Prior {
        &self.prior
    }

    fn observed(&self) -> &Statistics {
        &self.observed
    }

    fn analytic_jacobian(&self, theta: &[f64], u: &SeedVector) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, -self.random_effect(u) / (theta[0] * theta[0])))
    }

    fn analytic_optimum(&self, y: &[f64], u: &SeedVector) -> Option<Parameters> {
        Some(Parameters(vec![self.random_effect(u) / y[0]]))
    }

    fn default_schedule(&self) -> Vec<f64> {
        vec![1.0, 0.1, 0.01]
    }
}
