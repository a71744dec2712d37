//! Deterministic simulators `f(θ, u)` with externalized randomness.
//!
//! Every simulator here consumes a [`SeedVector`] of uniforms and turns it
//! into random effects through inverse CDFs, so that a fixed `u` makes the
//! forward map a pure function of `θ`.

mod exponential;
mod linked_normal;
mod lotka_volterra;
mod mg1;
mod mixture;
mod unknown_mean;

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf_inv;

use crate::error::{OmcError, Result};
use crate::prior::Prior;
use crate::types::{Parameters, SeedVector, Statistics};

pub use exponential::{Exponential, ExponentialOptions};
pub use linked_normal::{LinkedNormal, LinkedNormalOptions};
pub use lotka_volterra::{LotkaVolterra, LotkaVolterraOptions};
pub use mg1::{Mg1Options, Mg1Queue};
pub use mixture::{Mixture, MixtureOptions};
pub use unknown_mean::{UnknownMean, UnknownMeanOptions};

/// Registry names, in the order the experiments are usually presented.
pub const SIMULATOR_NAMES: [&str; 6] = [
    "unknown-mean",
    "mixture",
    "exponential",
    "linked-normal",
    "lotka-volterra",
    "mg1",
];

/// A simulator with externalized randomness.
pub trait Simulator: Send + Sync {
    fn name(&self) -> &'static str;
    fn d_theta(&self) -> usize;
    fn d_y(&self) -> usize;
    fn d_u(&self) -> usize;

    /// Deterministic forward map. Identical inputs must give identical bits.
    fn forward(&self, theta: &[f64], u: &SeedVector) -> Result<Statistics>;

    fn prior(&self) -> &Prior;

    fn observed(&self) -> &Statistics;

    /// Exact `∂f/∂θ` (shape `d_y × d_theta`) when it is known in closed form.
    fn analytic_jacobian(&self, _theta: &[f64], _u: &SeedVector) -> Option<DMatrix<f64>> {
        None
    }

    /// Exact solution of `f(θ, u) = y` when it is known in closed form.
    fn analytic_optimum(&self, _y: &[f64], _u: &SeedVector) -> Option<Parameters> {
        None
    }

    /// Per-statistic discrepancy scale this experiment is usually run with.
    fn default_scale(&self) -> Option<Vec<f64>> {
        None
    }

    /// Decreasing ε schedule this experiment is usually run with.
    fn default_schedule(&self) -> Vec<f64>;
}

/// Wraps a simulator and counts every forward call.
pub struct Counted<'a> {
    inner: &'a dyn Simulator,
    calls: AtomicU64,
}

impl<'a> Counted<'a> {
    pub fn new(inner: &'a dyn Simulator) -> Self {
        Self {
            inner,
            calls: AtomicU64::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl Simulator for Counted<'_> {
    fn name(&self) -> &'static str {
        self.inner.name()
    }
    fn d_theta(&self) -> usize {
        self.inner.d_theta()
    }
    fn d_y(&self) -> usize {
        self.inner.d_y()
    }
    fn d_u(&self) -> usize {
        self.inner.d_u()
    }
    fn forward(&self, theta: &[f64], u: &SeedVector) -> Result<Statistics> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.forward(theta, u)
    }
    fn prior(&self) -> &Prior {
        self.inner.prior()
    }
    fn observed(&self) -> &Statistics {
        self.inner.observed()
    }
    fn analytic_jacobian(&self, theta: &[f64], u: &SeedVector) -> Option<DMatrix<f64>> {
        self.inner.analytic_jacobian(theta, u)
    }
    fn analytic_optimum(&self, y: &[f64], u: &SeedVector) -> Option<Parameters> {
        self.inner.analytic_optimum(y, u)
    }
    fn default_scale(&self) -> Option<Vec<f64>> {
        self.inner.default_scale()
    }
    fn default_schedule(&self) -> Vec<f64> {
        self.inner.default_schedule()
    }
}

/// Hyperparameters for every registered simulator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SimulatorOptions {
    pub unknown_mean: UnknownMeanOptions,
    pub mixture: MixtureOptions,
    pub exponential: ExponentialOptions,
    pub linked_normal: LinkedNormalOptions,
    pub lotka_volterra: LotkaVolterraOptions,
    pub mg1: Mg1Options,
}

/// Looks a simulator up by its registry name.
pub fn build(name: &str, options: &SimulatorOptions) -> Result<Box<dyn Simulator>> {
    Ok(match name {
        "unknown-mean" => Box::new(UnknownMean::new(options.unknown_mean.clone())?),
        "mixture" => Box::new(Mixture::new(options.mixture.clone())?),
        "exponential" => Box::new(Exponential::new(options.exponential.clone())?),
        "linked-normal" => Box::new(LinkedNormal::new(options.linked_normal.clone())?),
        "lotka-volterra" => Box::new(LotkaVolterra::new(options.lotka_volterra.clone())?),
        "mg1" => Box::new(Mg1Queue::new(options.mg1.clone())?),
        other => return Err(OmcError::UnknownSimulator(other.to_string())),
    })
}

/// `mu + sigma·√2·erf⁻¹(2u − 1)`, the normal quantile.
pub fn uniform_to_normal(u: f64, mu: f64, sigma: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(OmcError::InfiniteQuantile { u });
    }
    if !(sigma > 0.0) {
        return Err(OmcError::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    Ok(mu + sigma * std_normal_quantile(u))
}

/// `−ln(1 − u)/rate`, the exponential quantile.
pub fn uniform_to_exponential(u: f64, rate: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(OmcError::InfiniteQuantile { u });
    }
    if !(rate > 0.0) {
        return Err(OmcError::InvalidArgument(format!("rate must be positive, got {rate}")));
    }
    Ok(exp_quantile(u) / rate)
}

/// Standard normal quantile; callers pass clipped `u`.
#[inline]
pub(crate) fn std_normal_quantile(u: f64) -> f64 {
    std::f64::consts::SQRT_2 * erf_inv(2.0 * u - 1.0)
}

/// Unit-rate exponential quantile; callers pass clipped `u`.
#[inline]
pub(crate) fn exp_quantile(u: f64) -> f64 {
    -(-u).ln_1p()
}

pub(crate) fn check_dims(sim: &dyn Simulator, theta: &[f64], u: &SeedVector) -> Result<()> {
    if theta.len() != sim.d_theta() {
        return Err(OmcError::DimensionMismatch {
            what: "parameter vector",
            expected: sim.d_theta(),
            found: theta.len(),
        });
    }
    if u.len() != sim.d_u() {
        return Err(OmcError::DimensionMismatch {
            what: "seed vector",
            expected: sim.d_u(),
            found: u.len(),
        });
    }
    Ok(())
}
