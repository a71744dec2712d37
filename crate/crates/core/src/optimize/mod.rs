//! Per-seed optimizers driving `ρ(y, f(θ, u))` towards zero.
//!
//! All optimizers share [`OptimizerState`], which can be resumed with a
//! fresh simulation budget. Sequential OMC rounds and the anytime scheduler
//! rely on this to warm-start particles.

mod gradient;
mod linalg;
mod random_walk;

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OmcError, Result};
use crate::kernel::{discrepancy, DiscrepancyKernel};
use crate::simulators::Simulator;
use crate::types::{Parameters, SeedVector, Statistics};

pub use linalg::{least_squares_step, SINGULARITY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Newton,
    GaussNewton,
    RandomWalk,
}

impl std::str::FromStr for Method {
    type Err = OmcError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "newton" => Ok(Method::Newton),
            "gauss-newton" | "gauss_newton" => Ok(Method::GaussNewton),
            "random-walk" | "random_walk" => Ok(Method::RandomWalk),
            other => Err(OmcError::InvalidArgument(format!("unknown optimizer '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Newton => "newton",
            Method::GaussNewton => "gauss-newton",
            Method::RandomWalk => "random-walk",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct OptimizerConfig {
    pub method: Method,
    /// Simulation budget per particle per round.
    pub max_sims_per_round: u64,
    /// Relative forward-difference step.
    pub fd_step: f64,
    /// Stop once `ρ` falls to this value; `None` stops at the kernel's ε.
    pub convergence_tol: Option<f64>,
    /// Initial random-walk proposal scale, in units of the prior sd.
    pub rw_scale: f64,
    pub rw_decay: f64,
    /// Consecutive rejections before the proposal scale decays.
    pub rw_patience: u32,
    /// Maximum step halvings in the Newton line search.
    pub line_search_halvings: u32,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Newton,
            max_sims_per_round: 1000,
            fd_step: 1e-5,
            convergence_tol: Some(1e-9),
            rw_scale: 0.25,
            rw_decay: 0.5,
            rw_patience: 20,
            line_search_halvings: 10,
        }
    }
}

impl OptimizerConfig {
    pub fn with_method(method: Method) -> Self {
        let mut c = Self {
            method,
            ..Self::default()
        };
        if method == Method::RandomWalk {
            c.convergence_tol = None;
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.max_sims_per_round >= 2
            && self.fd_step > 0.0
            && self.convergence_tol.is_none_or(|t| t > 0.0)
            && self.rw_scale > 0.0
            && self.rw_decay > 0.0
            && self.rw_decay < 1.0
            && self.rw_patience > 0;
        if ok {
            Ok(())
        } else {
            Err(OmcError::InvalidArgument(format!("invalid optimizer config {self:?}")))
        }
    }

    pub(crate) fn stop_tol(&self, kernel: &DiscrepancyKernel) -> f64 {
        self.convergence_tol.unwrap_or(kernel.epsilon())
    }
}

/// Endpoint of one optimization.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub theta_opt: Parameters,
    pub f_at_opt: Statistics,
    pub discrepancy: f64,
    /// `∂f/∂θ` at `theta_opt`; `None` when the simulator failed there.
    pub jacobian: Option<DMatrix<f64>>,
    pub sim_count: u64,
    /// `ρ ≤ ε`.
    pub converged: bool,
}

/// Resumable optimizer state for one particle.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    theta: Vec<f64>,
    f: Option<Statistics>,
    rho: f64,
    evaluated: bool,
    jacobian: Option<DMatrix<f64>>,
    jacobian_fresh: bool,
    sim_count: u64,
    rw_scale: f64,
    rw_streak: u32,
    proposals: ChaCha8Rng,
    stalled: bool,
}

impl OptimizerState {
    /// Starts at `theta0`; `proposals` drives random-walk moves.
    pub fn new(theta0: Vec<f64>, config: &OptimizerConfig, proposals: ChaCha8Rng) -> Self {
        Self {
            theta: theta0,
            f: None,
            rho: f64::INFINITY,
            evaluated: false,
            jacobian: None,
            jacobian_fresh: false,
            sim_count: 0,
            rw_scale: config.rw_scale,
            rw_streak: 0,
            proposals,
            stalled: false,
        }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn discrepancy(&self) -> f64 {
        self.rho
    }

    pub fn sim_count(&self) -> u64 {
        self.sim_count
    }

    /// Is the Jacobian at the current `θ` known?
    pub fn has_jacobian(&self) -> bool {
        self.jacobian_fresh
    }

    /// True once the optimizer can make no further progress.
    pub fn is_stalled(&self) -> bool {
        self.stalled
    }

    /// Has the state reached its stopping threshold?
    pub fn is_done(&self, config: &OptimizerConfig, kernel: &DiscrepancyKernel) -> bool {
        self.stalled || (self.evaluated && self.rho <= config.stop_tol(kernel) && self.jacobian_fresh)
    }

    /// Runs the configured method for at most `budget` further simulator
    /// calls and returns how many were used.
    pub fn advance(
        &mut self,
        sim: &dyn Simulator,
        y: &[f64],
        u: &SeedVector,
        kernel: &DiscrepancyKernel,
        config: &OptimizerConfig,
        budget: u64,
    ) -> Result<u64> {
        check_problem(sim, y, u, config.method)?;
        let mut ctx = Ctx {
            sim,
            y,
            u,
            kernel,
            config,
            budget,
            used: 0,
        };
        match config.method {
            Method::Newton | Method::GaussNewton => self.advance_gradient(&mut ctx),
            Method::RandomWalk => self.advance_random_walk(&mut ctx),
        }
        self.finish_jacobian(&mut ctx);
        self.sim_count += ctx.used;
        Ok(ctx.used)
    }

    pub fn result(&self, kernel: &DiscrepancyKernel) -> OptimizationResult {
        OptimizationResult {
            theta_opt: Parameters(self.theta.clone()),
            f_at_opt: self
                .f
                .clone()
                .unwrap_or_else(|| Statistics(Vec::new())),
            discrepancy: self.rho,
            jacobian: if self.jacobian_fresh { self.jacobian.clone() } else { None },
            sim_count: self.sim_count,
            converged: self.f.is_some() && kernel.accepts(self.rho),
        }
    }

    fn evaluate(&mut self, ctx: &mut Ctx<'_>, theta: &[f64]) -> Option<(Statistics, f64)> {
        ctx.used += 1;
        let f = ctx.sim.forward(theta, ctx.u).ok()?;
        if !f.is_finite() {
            return None;
        }
        let rho = discrepancy(ctx.y, &f, ctx.kernel).ok()?;
        Some((f, rho))
    }

    /// First evaluation at the starting point, if not already done.
    fn ensure_evaluated(&mut self, ctx: &mut Ctx<'_>) -> bool {
        if !self.evaluated {
            if ctx.remaining() < 1 {
                return false;
            }
            self.evaluated = true;
            let theta = self.theta.clone();
            if let Some((f, rho)) = self.evaluate(ctx, &theta) {
                self.f = Some(f);
                self.rho = rho;
            }
        }
        true
    }

    fn accept(&mut self, theta: Vec<f64>, f: Statistics, rho: f64) {
        self.theta = theta;
        self.f = Some(f);
        self.rho = rho;
        self.jacobian_fresh = false;
    }

    fn refresh_jacobian(&mut self, ctx: &mut Ctx<'_>) -> bool {
        let Some(f) = self.f.as_ref() else {
            return false;
        };
        let (jac, calls) = fd_jacobian_counted(ctx.sim, &self.theta, ctx.u, f, ctx.config.fd_step);
        ctx.used += calls;
        match jac {
            Ok(j) => {
                self.jacobian = Some(j);
                self.jacobian_fresh = true;
                true
            }
            Err(e) => {
                log::debug!("jacobian failed at {:?}: {e}", self.theta);
                self.jacobian = None;
                self.jacobian_fresh = false;
                false
            }
        }
    }

    fn finish_jacobian(&mut self, ctx: &mut Ctx<'_>) {
        if self.f.is_some()
            && !self.jacobian_fresh
            && ctx.remaining() >= ctx.sim.d_theta() as u64
            && !self.refresh_jacobian(ctx)
        {
            self.stalled = true;
        }
    }
}

struct Ctx<'a> {
    sim: &'a dyn Simulator,
    y: &'a [f64],
    u: &'a SeedVector,
    kernel: &'a DiscrepancyKernel,
    config: &'a OptimizerConfig,
    budget: u64,
    used: u64,
}

impl Ctx<'_> {
    fn remaining(&self) -> u64 {
        self.budget.saturating_sub(self.used)
    }
}

fn check_problem(sim: &dyn Simulator, y: &[f64], u: &SeedVector, method: Method) -> Result<()> {
    if y.len() != sim.d_y() {
        return Err(OmcError::DimensionMismatch {
            what: "observed statistics",
            expected: sim.d_y(),
            found: y.len(),
        });
    }
    if u.len() != sim.d_u() {
        return Err(OmcError::DimensionMismatch {
            what: "seed vector",
            expected: sim.d_u(),
            found: u.len(),
        });
    }
    match method {
        Method::Newton if sim.d_theta() != sim.d_y() => Err(OmcError::InvalidArgument(format!(
            "newton requires as many statistics as parameters ({} vs {}); use gauss-newton",
            sim.d_y(),
            sim.d_theta()
        ))),
        Method::GaussNewton if sim.d_theta() > sim.d_y() => Err(OmcError::Underdetermined {
            d_theta: sim.d_theta(),
            d_y: sim.d_y(),
        }),
        _ => Ok(()),
    }
}

/// One-sided finite-difference Jacobian.
///
/// Column `d` is `(f(θ + h_d e_d, u) − f_base) / h_d` with
/// `h_d = step·max(1, |θ_d|)`. When the forward point fails the backward
/// point is tried instead. Normally costs exactly `d_theta` calls.
pub fn fd_jacobian(
    sim: &dyn Simulator,
    theta: &[f64],
    u: &SeedVector,
    f_base: &Statistics,
    step: f64,
) -> Result<DMatrix<f64>> {
    if !(step > 0.0) {
        return Err(OmcError::InvalidArgument(format!("fd step must be positive, got {step}")));
    }
    fd_jacobian_counted(sim, theta, u, f_base, step).0
}

fn fd_jacobian_counted(
    sim: &dyn Simulator,
    theta: &[f64],
    u: &SeedVector,
    f_base: &Statistics,
    step: f64,
) -> (Result<DMatrix<f64>>, u64) {
    let (rows, cols) = (f_base.len(), theta.len());
    let mut jac = DMatrix::zeros(rows, cols);
    let mut calls = 0;
    let mut probe = theta.to_vec();
    for d in 0..cols {
        let mut column = None;
        for sign in [1.0, -1.0] {
            let target = theta[d] + sign * step * theta[d].abs().max(1.0);
            let h = target - theta[d];
            probe[d] = target;
            calls += 1;
            if let Ok(f) = sim.forward(&probe, u) {
                if f.len() == rows && f.is_finite() {
                    column = Some((f, h));
                    break;
                }
            }
        }
        probe[d] = theta[d];
        match column {
            Some((f, h)) => {
                for r in 0..rows {
                    jac[(r, d)] = (f[r] - f_base[r]) / h;
                }
            }
            None => return (Err(OmcError::JacobianColumn { column: d }), calls),
        }
    }
    (Ok(jac), calls)
}

/// Runs one complete optimization from `theta0` with the configured method.
pub fn optimize(
    sim: &dyn Simulator,
    y: &[f64],
    u: &SeedVector,
    kernel: &DiscrepancyKernel,
    config: &OptimizerConfig,
    theta0: Vec<f64>,
    proposals: ChaCha8Rng,
) -> Result<OptimizationResult> {
    config.validate()?;
    let mut state = OptimizerState::new(theta0, config, proposals);
    state.advance(sim, y, u, kernel, config, config.max_sims_per_round)?;
    Ok(state.result(kernel))
}

/// Newton's method `θ ← θ − J⁻¹(f − y)` with backtracking line search.
pub fn newton_optimize(
    sim: &dyn Simulator,
    y: &[f64],
    u: &SeedVector,
    kernel: &DiscrepancyKernel,
    config: &OptimizerConfig,
    theta0: Vec<f64>,
) -> Result<OptimizationResult> {
    let config = OptimizerConfig {
        method: Method::Newton,
        ..config.clone()
    };
    optimize(sim, y, u, kernel, &config, theta0, unused_rng())
}

/// Gauss-Newton `θ ← θ − J†(f − y)`; identical to Newton when `J` is square.
pub fn gauss_newton_optimize(
    sim: &dyn Simulator,
    y: &[f64],
    u: &SeedVector,
    kernel: &DiscrepancyKernel,
    config: &OptimizerConfig,
    theta0: Vec<f64>,
) -> Result<OptimizationResult> {
    let config = OptimizerConfig {
        method: Method::GaussNewton,
        ..config.clone()
    };
    optimize(sim, y, u, kernel, &config, theta0, unused_rng())
}

/// Greedy random-walk descent driven by `proposals`.
pub fn random_walk_optimize(
    sim: &dyn Simulator,
    y: &[f64],
    u: &SeedVector,
    kernel: &DiscrepancyKernel,
    config: &OptimizerConfig,
    theta0: Vec<f64>,
    proposals: ChaCha8Rng,
) -> Result<OptimizationResult> {
    let config = OptimizerConfig {
        method: Method::RandomWalk,
        ..config.clone()
    };
    optimize(sim, y, u, kernel, &config, theta0, proposals)
}

fn unused_rng() -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(0)
}
