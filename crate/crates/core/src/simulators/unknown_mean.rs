use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_dims, std_normal_quantile, Simulator};
use crate::error::{OmcError, Result};
use crate::prior::{Marginal, Prior};
use crate::types::{Parameters, SeedVector, Statistics};

/// Hyperparameters of the unknown-mean experiment. The prior is
/// `N(theta0, k·sigma²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct UnknownMeanOptions {
    pub theta0: f64,
    pub k: f64,
    pub sigma: f64,
    pub m: usize,
    pub observed: f64,
}

impl Default for UnknownMeanOptions {
    fn default() -> Self {
        Self {
            theta0: 0.0,
            k: 1.0,
            sigma: 1.0,
            m: 2,
            observed: 0.0,
        }
    }
}

/// Mean of `M` draws from `N(θ, σ²)`: `f(θ, u) = θ + R(u)`.
#[derive(Debug, Clone)]
pub struct UnknownMean {
    options: UnknownMeanOptions,
    prior: Prior,
    observed: Statistics,
}

impl UnknownMean {
    pub fn new(options: UnknownMeanOptions) -> Result<Self> {
        if options.m == 0 || !(options.sigma > 0.0) || !(options.k > 0.0) {
            return Err(OmcError::InvalidArgument(format!("invalid unknown-mean options {options:?}")));
        }
        let prior = Prior::independent(vec![Marginal::Normal {
            mean: options.theta0,
            sd: (options.k * options.sigma * options.sigma).sqrt(),
        }]);
        let observed = Statistics(vec![options.observed]);
        Ok(Self { options, prior, observed })
    }

    pub fn options(&self) -> &UnknownMeanOptions {
        &self.options
    }

    /// Average random effect `R(u) = Σ σ√2 erf⁻¹(2u_m − 1) / M`.
    pub fn random_effect(&self, u: &SeedVector) -> f64 {
        let sum: f64 = (0..u.len()).map(|i| std_normal_quantile(u.clipped(i))).sum();
        self.options.sigma * sum / u.len() as f64
    }
}

impl Simulator for UnknownMean {
    fn name(&self) -> &'static str {
        "unknown-mean"
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
        vec![0.1, 0.01]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn median_seeds_give_zero_effect() {
        let sim = UnknownMean::new(Default::default()).unwrap();
        let u = SeedVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(sim.forward(&[2.0], &u).unwrap().0, vec![2.0]);
        assert_eq!(sim.analytic_optimum(&[0.0], &u).unwrap().0, vec![0.0]);
    }

    #[test]
    fn optimum_reproduces_observation() {
        let sim = UnknownMean::new(Default::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..100 {
            let y = [i as f64 * 0.1 - 5.0];
            let u = SeedVector::sample(sim.d_u(), &mut rng);
            let theta = sim.analytic_optimum(&y, &u).unwrap();
            let f = sim.forward(&theta, &u).unwrap();
            assert!((f[0] - y[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn wrong_dimensions_error() {
        let sim = UnknownMean::new(Default::default()).unwrap();
        let u = SeedVector::new(vec![0.5]).unwrap();
        assert!(sim.forward(&[0.0], &u).is_err());
    }
}
