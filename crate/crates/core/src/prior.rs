//! Prior distributions over parameters.

use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A one-dimensional prior factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Marginal {
    Normal { mean: f64, sd: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Shape/rate parameterization.
    Gamma { shape: f64, rate: f64 },
    /// `ln θ ~ N(mu, sigma²)`.
    LogNormal { mu: f64, sigma: f64 },
}

impl Marginal {
    fn log_density(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - LN_SQRT_2PI
            }
            Marginal::Uniform { lo, hi } => {
                if x > lo && x < hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Marginal::Gamma { shape, rate } => {
                if x > 0.0 {
                    shape * rate.ln() + (shape - 1.0) * x.ln() - rate * x - ln_gamma(shape)
                } else {
                    f64::NEG_INFINITY
                }
            }
            Marginal::LogNormal { mu, sigma } => {
                if x > 0.0 {
                    let z = (x.ln() - mu) / sigma;
                    -0.5 * z * z - sigma.ln() - x.ln() - LN_SQRT_2PI
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } => Normal::new(mean, sd).expect("valid normal").sample(rng),
            Marginal::Uniform { lo, hi } => {
                // open interval; a draw exactly at `lo` would have zero density
                loop {
                    let x = lo + (hi - lo) * rng.random::<f64>();
                    if x > lo {
                        return x;
                    }
                }
            }
            Marginal::Gamma { shape, rate } => {
                Gamma::new(shape, 1.0 / rate).expect("valid gamma").sample(rng)
            }
            Marginal::LogNormal { mu, sigma } => {
                LogNormal::new(mu, sigma).expect("valid lognormal").sample(rng)
            }
        }
    }

    fn sd(&self) -> f64 {
        match *self {
            Marginal::Normal { sd, .. } => sd,
            Marginal::Uniform { lo, hi } => (hi - lo) / 12f64.sqrt(),
            Marginal::Gamma { shape, rate } => shape.sqrt() / rate,
            Marginal::LogNormal { mu, sigma } => {
                let s2 = sigma * sigma;
                ((s2.exp() - 1.0) * (2.0 * mu + s2).exp()).sqrt()
            }
        }
    }
}

/// Prior over the full parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Prior {
    /// Product of independent marginals.
    Independent { marginals: Vec<Marginal> },
    /// `θ₁ ~ U(0, a)`, `θ₂ − θ₁ ~ U(0, b)`, `θ₃ ~ U(0, c)`: service-time bounds
    /// and arrival rate of a single-server queue.
    Queue {
        min_service_hi: f64,
        service_width_hi: f64,
        rate_hi: f64,
    },
}

impl Prior {
    pub fn independent(marginals: Vec<Marginal>) -> Self {
        Prior::Independent { marginals }
    }

    pub fn dim(&self) -> usize {
        match self {
            Prior::Independent { marginals } => marginals.len(),
            Prior::Queue { .. } => 3,
        }
    }

    /// Log density; `-inf` outside the support.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.dim());
        match self {
            Prior::Independent { marginals } => marginals
                .iter()
                .zip(theta)
                .map(|(m, x)| m.log_density(*x))
                .sum(),
            Prior::Queue {
                min_service_hi,
                service_width_hi,
                rate_hi,
            } => {
                let [t1, t2, t3] = [theta[0], theta[1], theta[2]];
                let width = t2 - t1;
                if t1 > 0.0
                    && t1 < *min_service_hi
                    && width > 0.0
                    && width < *service_width_hi
                    && t3 > 0.0
                    && t3 < *rate_hi
                {
                    -(min_service_hi * service_width_hi * rate_hi).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn density(&self, theta: &[f64]) -> f64 {
        self.log_density(theta).exp()
    }

    pub fn in_support(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim() && self.log_density(theta) > f64::NEG_INFINITY
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Prior::Independent { marginals } => marginals.iter().map(|m| m.sample(rng)).collect(),
            Prior::Queue {
                min_service_hi,
                service_width_hi,
                rate_hi,
            } => {
                let u = Marginal::Uniform { lo: 0.0, hi: 1.0 };
                let t1 = min_service_hi * u.sample(rng);
                let t2 = t1 + service_width_hi * u.sample(rng);
                let t3 = rate_hi * u.sample(rng);
                vec![t1, t2, t3]
            }
        }
    }

    /// Per-coordinate prior standard deviation, used to shape random-walk
    /// proposals.
    pub fn scale(&self) -> Vec<f64> {
        match self {
            Prior::Independent { marginals } => marginals.iter().map(Marginal::sd).collect(),
            Prior::Queue {
                min_service_hi,
                service_width_hi,
                rate_hi,
            } => {
                let r12 = 12f64.sqrt();
                vec![
                    min_service_hi / r12,
                    (min_service_hi.powi(2) + service_width_hi.powi(2)).sqrt() / r12,
                    rate_hi / r12,
                ]
            }
        }
    }
}

/// Isotropic standard-normal vector of length `d`.
pub(crate) fn standard_normal_vec<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}
