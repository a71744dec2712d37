use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dims, std_normal_quantile, Simulator};
use crate::error::{OmcError, Result};
use crate::prior::{Marginal, Prior};
use crate::types::{SeedVector, Statistics};

/// Hyperparameters of the predator-prey experiment.
///
/// The prior hyperparameters and the reference parameters that generate the
/// synthetic observation are local choices, not published values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct LotkaVolterraOptions {
    pub steps: usize,
    pub initial: [f64; 2],
    pub noise_sd: f64,
    pub prior_log_mean: [f64; 3],
    pub prior_log_sd: [f64; 3],
    pub reference_theta: [f64; 3],
    pub reference_seed: u64,
}

impl Default for LotkaVolterraOptions {
    fn default() -> Self {
        Self {
            steps: 50,
            initial: [100.0, 100.0],
            noise_sd: 10.0,
            prior_log_mean: [-2.0, -5.0, -2.0],
            prior_log_sd: [1.0, 1.0, 1.0],
            reference_theta: [0.02, 0.002, 0.001],
            reference_seed: 20_150_101,
        }
    }
}

/// Euler-discretized stochastic Lotka-Volterra model with unit time steps:
///
/// ```text
/// prey'     = prey + θ₁·prey − θ₂·prey·pred + r₁
/// predator' = pred − θ₂·pred − θ₃·prey·pred + r₂
/// ```
///
/// with `r ~ N(0, noise_sd²)` added once per step and populations clamped at
/// zero. The statistics are the prey trajectory followed by the predator
/// trajectory (`2·steps` values).
#[derive(Debug, Clone)]
pub struct LotkaVolterra {
    options: LotkaVolterraOptions,
    prior: Prior,
    observed: Statistics,
}

impl LotkaVolterra {
    pub fn new(options: LotkaVolterraOptions) -> Result<Self> {
        if options.steps == 0 || !(options.noise_sd >= 0.0) || options.prior_log_sd.iter().any(|s| !(*s > 0.0)) {
            return Err(OmcError::InvalidArgument(format!("invalid lotka-volterra options {options:?}")));
        }
        let prior = Prior::independent(
            options
                .prior_log_mean
                .iter()
                .zip(&options.prior_log_sd)
                .map(|(&mu, &sigma)| Marginal::LogNormal { mu, sigma })
                .collect(),
        );
        let mut sim = Self {
            options,
            prior,
            observed: Statistics(Vec::new()),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(sim.options.reference_seed);
        let u = SeedVector::sample(sim.d_u(), &mut rng);
        sim.observed = sim.forward(&sim.options.reference_theta.clone(), &u)?;
        Ok(sim)
    }

    pub fn options(&self) -> &LotkaVolterraOptions {
        &self.options
    }
}

impl Simulator for LotkaVolterra {
    fn name(&self) -> &'static str {
        "lotka-volterra"
    }
    fn d_theta(&self) -> usize {
        3
    }
    fn d_y(&self) -> usize {
        2 * self.options.steps
    }
    fn d_u(&self) -> usize {
        2 * self.options.steps
    }

    fn forward(&self, theta: &[f64], u: &SeedVector) -> Result<Statistics> {
        check_dims(self, theta, u)?;
        let t = self.options.steps;
        let sd = self.options.noise_sd;
        let [mut prey, mut pred] = self.options.initial;
        let mut out = vec![0.0; 2 * t];
        for step in 0..t {
            let r1 = sd * std_normal_quantile(u.clipped(step));
            let r2 = sd * std_normal_quantile(u.clipped(t + step));
            let interaction = prey * pred;
            let next_prey = prey + theta[0] * prey - theta[1] * interaction + r1;
            let next_pred = pred - theta[1] * pred - theta[2] * interaction + r2;
            if !(next_prey.is_finite() && next_pred.is_finite()) {
                return Err(OmcError::Divergent {
                    simulator: self.name(),
                    step,
                });
            }
            prey = next_prey.max(0.0);
            pred = next_pred.max(0.0);
            out[step] = prey;
            out[t + step] = pred;
        }
        Ok(Statistics(out))
    }

    fn prior(&self) -> &Prior {
        &self.prior
    }

    fn observed(&self) -> &Statistics {
        &self.observed
    }

    /// Residuals are measured as an RMS in units of the per-step noise:
    /// `ρ = ‖y − x‖ / (noise_sd·√(2T))`.
    fn default_scale(&self) -> Option<Vec<f64>> {
        let d = self.d_y();
        Some(vec![self.options.noise_sd.max(1e-12) * (d as f64).sqrt(); d])
    }

    fn default_schedule(&self) -> Vec<f64> {
        vec![3.0, 2.0]
    }
}
