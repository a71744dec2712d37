use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_dims, exp_quantile, Simulator};
use crate::error::{OmcError, Result};
use crate::prior::Prior;
use crate::types::{SeedVector, Statistics};

/// Hyperparameters of the M/G/1 queue experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct Mg1Options {
    /// Number of customers.
    pub m: usize,
    /// Quantile levels of the sorted inter-departure times.
    pub quantiles: Vec<f64>,
    pub min_service_hi: f64,
    pub service_width_hi: f64,
    pub rate_hi: f64,
    pub reference_theta: [f64; 3],
    pub reference_seed: u64,
}

impl Default for Mg1Options {
    fn default() -> Self {
        Self {
            m: 50,
            quantiles: vec![0.25, 0.5, 0.75],
            min_service_hi: 10.0,
            service_width_hi: 10.0,
            rate_hi: 1.0 / 3.0,
            reference_theta: [1.0, 5.0, 0.2],
            reference_seed: 20_150_102,
        }
    }
}

/// Single-server queue with `Exp(θ₃)` inter-arrival times and `U(θ₁, θ₂)`
/// service times, observed through quantiles of the inter-departure times.
///
/// The first `M` seed entries drive inter-arrivals, the last `M` drive
/// service times.
#[derive(Debug, Clone)]
pub struct Mg1Queue {
    options: Mg1Options,
    prior: Prior,
    observed: Statistics,
}

impl Mg1Queue {
    pub fn new(options: Mg1Options) -> Result<Self> {
        if options.m == 0
            || options.quantiles.is_empty()
            || options.quantiles.iter().any(|q| !(0.0..=1.0).contains(q))
        {
            return Err(OmcError::InvalidArgument(format!("invalid mg1 options {options:?}")));
        }
        let prior = Prior::Queue {
            min_service_hi: options.min_service_hi,
            service_width_hi: options.service_width_hi,
            rate_hi: options.rate_hi,
        };
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

    pub fn options(&self) -> &Mg1Options {
        &self.options
    }

    /// Inter-departure times `x_1..x_M` in customer order.
    pub fn inter_departures(&self, theta: &[f64], u: &SeedVector) -> Result<Vec<f64>> {
        check_dims(self, theta, u)?;
        let [lo, hi, rate] = [theta[0], theta[1], theta[2]];
        if !(hi >= lo) || !(rate > 0.0) {
            return Err(OmcError::OutsideSupport {
                simulator: self.name(),
                theta: theta.to_vec(),
            });
        }
        let m = self.options.m;
        let mut arrival = 0.0;
        let mut departure = 0.0;
        let mut x = Vec::with_capacity(m);
        for i in 0..m {
            arrival += exp_quantile(u[i].min(1.0 - crate::types::SEED_CLIP)) / rate;
            let service = lo + (hi - lo) * u[m + i];
            let xi = service + (arrival - departure).max(0.0);
            departure += xi;
            x.push(xi);
        }
        Ok(x)
    }
}

/// Linear-interpolation quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Simulator for Mg1Queue {
    fn name(&self) -> &'static str {
        "mg1"
    }
    fn d_theta(&self) -> usize {
        3
    }
    fn d_y(&self) -> usize {
        self.options.quantiles.len()
    }
    fn d_u(&self) -> usize {
        2 * self.options.m
    }

    fn forward(&self, theta: &[f64], u: &SeedVector) -> Result<Statistics> {
        let mut x = self.inter_departures(theta, u)?;
        x.sort_by(f64::total_cmp);
        Ok(Statistics(
            self.options.quantiles.iter().map(|&q| quantile_sorted(&x, q)).collect(),
        ))
    }

    fn prior(&self) -> &Prior {
        &self.prior
    }

    fn observed(&self) -> &Statistics {
        &self.observed
    }

    fn default_schedule(&self) -> Vec<f64> {
        vec![1.0]
    }
}
