use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_dims, std_normal_quantile, Simulator};
use crate::error::{OmcError, Result};
use crate::prior::{Marginal, Prior};
use crate::types::{SeedVector, Statistics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct LinkedNormalOptions {
    pub m: usize,
    pub prior_hi: f64,
    pub observed: [f64; 2],
}

impl Default for LinkedNormalOptions {
    fn default() -> Self {
        Self {
            m: 10,
            prior_hi: 10.0,
            observed: [2.7, 12.8],
        }
    }
}

/// `M` draws from `N(θ, θ²)` summarized by their mean and (biased) variance:
/// `f(θ, u) = (θR(u), θ²V(u))`.
#[derive(Debug, Clone)]
pub struct LinkedNormal {
    options: LinkedNormalOptions,
    prior: Prior,
    observed: Statistics,
}

impl LinkedNormal {
    pub fn new(options: LinkedNormalOptions) -> Result<Self> {
        if options.m < 2 || !(options.prior_hi > 0.0) {
            return Err(OmcError::InvalidArgument(format!("invalid linked-normal options {options:?}")));
        }
        let prior = Prior::independent(vec![Marginal::Uniform {
            lo: 0.0,
            hi: options.prior_hi,
        }]);
        let observed = Statistics(options.observed.to_vec());
        Ok(Self { options, prior, observed })
    }

    /// `(R(u), V(u))` with `r_m = 1 + √2 erf⁻¹(2u_m − 1)`.
    pub fn effects(&self, u: &SeedVector) -> (f64, f64) {
        let m = u.len() as f64;
        let r: Vec<f64> = (0..u.len()).map(|i| 1.0 + std_normal_quantile(u.clipped(i))).collect();
        let mean = r.iter().sum::<f64>() / m;
        let var = r.iter().map(|x| x * x).sum::<f64>() / m - mean * mean;
        (mean, var)
    }
}

impl Simulator for LinkedNormal {
    fn name(&self) -> &'static str {
        "linked-normal"
    }
    fn d_theta(&self) -> usize {
        1
    }
    fn d_y(&self) -> usize {
        2
    }
    fn d_u(&self) -> usize {
        self.options.m
    }

    fn forward(&self, theta: &[f64], u: &SeedVector) -> Result<Statistics> {
        check_dims(self, theta, u)?;
        let (r, v) = self.effects(u);
        let t = theta[0];
        Ok(Statistics(vec![t * r, t * t * v]))
    }

    fn prior(&self) -> &Prior {
        &self.prior
    }

    fn observed(&self) -> &Statistics {
        &self.observed
    }

    fn analytic_jacobian(&self, theta: &[f64], u: &SeedVector) -> Option<DMatrix<f64>> {
        let (r, v) = self.effects(u);
        Some(DMatrix::from_column_slice(2, 1, &[r, 2.0 * theta[0] * v]))
    }

    /// Residuals relative to the observed magnitudes.
    fn default_scale(&self) -> Option<Vec<f64>> {
        Some(self.options.observed.iter().map(|y| y.abs().max(f64::MIN_POSITIVE)).collect())
    }

    fn default_schedule(&self) -> Vec<f64> {
        vec![0.25, 0.1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_theta_gives_zero_statistics() {
        let sim = LinkedNormal::new(Default::default()).unwrap();
        let u = SeedVector::new(vec![0.3; 10]).unwrap();
        assert_eq!(sim.forward(&[0.0], &u).unwrap().0, vec![0.0, 0.0]);
    }

    #[test]
    fn median_seeds() {
        let sim = LinkedNormal::new(Default::default()).unwrap();
        let u = SeedVector::new(vec![0.5; 10]).unwrap();
        assert_eq!(sim.effects(&u), (1.0, 0.0));
        assert_eq!(sim.forward(&[3.0], &u).unwrap().0, vec![3.0, 0.0]);
        let j = sim.analytic_jacobian(&[3.0], &u).unwrap();
        assert_eq!((j[(0, 0)], j[(1, 0)]), (1.0, 0.0));
        assert_eq!(j.shape(), (2, 1));
    }
}
