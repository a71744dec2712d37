use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_dims, std_normal_quantile, Simulator};
use crate::error::{OmcError, Result};
use crate::prior::{Marginal, Prior};
use crate::types::{Parameters, SeedVector, Statistics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct MixtureOptions {
    /// Probability of the first component.
    pub weight: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub lo: f64,
    pub hi: f64,
    pub observed: f64,
}

impl Default for MixtureOptions {
    fn default() -> Self {
        Self {
            weight: 0.5,
            sigma1: 1.0,
            sigma2: 0.1,
            lo: -10.0,
            hi: 10.0,
            observed: 0.0,
        }
    }
}

/// A single draw from `ρN(θ, σ₁²) + (1 − ρ)N(θ, σ₂²)`.
///
/// `u₁` selects the component, `u₂` drives the innovation.
#[derive(Debug, Clone)]
pub struct Mixture {
    options: MixtureOptions,
    prior: Prior,
    observed: Statistics,
}

impl Mixture {
    pub fn new(options: MixtureOptions) -> Result<Self> {
        if !(0.0..=1.0).contains(&options.weight)
            || !(options.sigma1 > 0.0 && options.sigma2 > 0.0)
            || !(options.lo < options.hi)
        {
            return Err(OmcError::InvalidArgument(format!("invalid mixture options {options:?}")));
        }
        let prior = Prior::independent(vec![Marginal::Uniform {
            lo: options.lo,
            hi: options.hi,
        }]);
        let observed = Statistics(vec![options.observed]);
        Ok(Self { options, prior, observed })
    }

    pub fn options(&self) -> &MixtureOptions {
        &self.options
    }

    pub fn random_effect(&self, u: &SeedVector) -> f64 {
        let sigma = if u[0] < self.options.weight {
            self.options.sigma1
        } else {
            self.options.sigma2
        };
        sigma * std_normal_quantile(u.clipped(1))
    }

    /// Exact posterior CDF at `y = observed` as ε → 0, truncated to the prior
    /// interval.
    pub fn posterior_cdf(&self, theta: f64) -> f64 {
        use statrs::function::erf::erf;
        let o = &self.options;
        let phi = |x: f64, s: f64| 0.5 * (1.0 + erf((x - o.observed) / (s * std::f64::consts::SQRT_2)));
        let mix = |x: f64| o.weight * phi(x, o.sigma1) + (1.0 - o.weight) * phi(x, o.sigma2);
        let (a, b) = (mix(o.lo), mix(o.hi));
        ((mix(theta.clamp(o.lo, o.hi)) - a) / (b - a)).clamp(0.0, 1.0)
    }
}

impl Simulator for Mixture {
    fn name(&self) -> &'static str {
        "mixture"
    }
    fn d_theta(&self) -> usize {
        1
    }
    fn d_y(&self) -> usize {
        1
    }
    fn d_u(&self) -> usize {
        2
    }

    fn forward(&self, theta: &[f64], u: &SeedVector) -> Result<Statistics> {
        check_dims(self, theta, u)?;
        Ok(Statistics(vec![theta[0] + self.random_effect(u)]))
    }

    fn prior(&self) -> &Prior {
        &self.prior
    }

    fn observed(&self) -> &Statistics {
        &self.observed
    }

    fn analytic_jacobian(&self, _theta: &[f64], _u: &SeedVector) -> Option<DMatrix<f64>> {
        Some(DMatrix::from_element(1, 1, 1.0))
    }

    fn analytic_optimum(&self, y: &[f64], u: &SeedVector) -> Option<Parameters> {
        Some(Parameters(vec![y[0] - self.random_effect(u)]))
    }

    fn default_schedule(&self) -> Vec<f64> {
        vec![0.1, 0.025, 0.01]
    }
}
