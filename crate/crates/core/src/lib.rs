//! Optimization Monte Carlo (OMC): likelihood-free inference that turns each
//! simulator seed into a posterior sample by optimization.
//!
//! A simulator is written as a deterministic map `f(θ, u)` of the parameters
//! and a vector of uniforms. For every draw `u_i` the optimizer solves
//! `f(θ, u_i) ≈ y`; the endpoint `θ°` is corrected to the centroid `θ*` of
//! the linearized acceptance region and weighted by
//! `p(θ*) · det(JᵀJ)^{-1/2}`.
//!
//! ```
//! use omc::prelude::*;
//!
//! let sim = UnknownMean::new(UnknownMeanOptions::default()).unwrap();
//! let y = sim.observed().0.clone();
//! let kernel = DiscrepancyKernel::new(0.01).unwrap();
//! let plan = RunPlan::batch(42, 200, 1, 1000);
//! let run = run_batch(&plan, &sim, &y, &kernel, &OptimizerConfig::default()).unwrap();
//! assert_eq!(run.ensemble.accepted_count(), 200);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod ensemble;
pub mod error;
pub mod kernel;
pub mod optimize;
pub mod parallel;
pub mod prior;
pub mod simulators;
pub mod summary;
pub mod types;
pub mod weighting;

pub use error::{OmcError, Result};

pub mod prelude {
    pub use crate::baselines::{rejection_abc, sequential_omc, smc_abc, EpsilonSchedule, RoundReport, SamplerRun};
    pub use crate::ensemble::{ess, posterior_expectation, WeightedEnsemble};
    pub use crate::error::{OmcError, Result};
    pub use crate::kernel::{discrepancy, DiscrepancyKernel};
    pub use crate::optimize::{optimize, Method, OptimizationResult, OptimizerConfig};
    pub use crate::parallel::{run_anytime, run_batch, AnytimeOptions, Mode, RunPlan};
    pub use crate::prior::{Marginal, Prior};
    pub use crate::simulators::*;
    pub use crate::types::{Parameters, Particle, SeedVector, Statistics};
    pub use crate::weighting::build_ensemble;
}
