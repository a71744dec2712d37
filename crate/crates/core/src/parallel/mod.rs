//! Execution engine: independent per-particle optimizations on a worker pool,
//! either to a fixed per-particle budget (batch) or under a global budget
//! that always funds the worst particle next (anytime).

mod anytime;
mod pool;
mod seeds;

use serde::{Deserialize, Serialize};

use crate::ensemble::WeightedEnsemble;
use crate::error::{OmcError, Result};
use crate::kernel::DiscrepancyKernel;
use crate::optimize::{OptimizerConfig, OptimizerState};
use crate::simulators::{Counted, Simulator};
use crate::types::SeedVector;
use crate::weighting::build_ensemble;

pub use anytime::{run_anytime, AnytimeOptions, AnytimeRun, Snapshot};
pub use pool::WorkerPool;
pub use seeds::{mix_seed, ParticleSeedStream, StreamLabel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Batch,
    Anytime,
}

impl std::str::FromStr for Mode {
    type Err = OmcError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch" => Ok(Mode::Batch),
            "anytime" => Ok(Mode::Anytime),
            other => Err(OmcError::InvalidArgument(format!("unknown mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub master_seed: u64,
    pub n_particles: usize,
    pub n_workers: usize,
    pub mode: Mode,
    /// Global simulator-call budget (anytime mode).
    pub total_sim_budget: u64,
    /// Simulator calls per particle (batch mode).
    pub per_particle_budget: u64,
}

impl RunPlan {
    pub fn batch(master_seed: u64, n_particles: usize, n_workers: usize, per_particle_budget: u64) -> Self {
        Self {
            master_seed,
            n_particles,
            n_workers,
            mode: Mode::Batch,
            total_sim_budget: per_particle_budget * n_particles as u64,
            per_particle_budget,
        }
    }

    pub fn anytime(master_seed: u64, n_particles: usize, n_workers: usize, total_sim_budget: u64) -> Self {
        Self {
            master_seed,
            n_particles,
            n_workers,
            mode: Mode::Anytime,
            total_sim_budget,
            per_particle_budget: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles == 0 || self.n_workers == 0 || self.total_sim_budget == 0 || self.per_particle_budget == 0 {
            return Err(OmcError::InvalidArgument(format!("invalid run plan {self:?}")));
        }
        Ok(())
    }
}

/// Progress notification for one particle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgressEvent {
    pub particle: usize,
    pub discrepancy: f64,
    pub sim_count: u64,
}

/// Ensemble plus the engine-side call count.
#[derive(Debug, Clone)]
pub struct BatchRun {
    pub ensemble: WeightedEnsemble,
    /// Forward calls observed by the engine's own counter.
    pub simulator_calls: u64,
}

/// One particle's seed and optimizer, initialized from its streams.
#[derive(Debug, Clone)]
pub struct ParticleTask {
    pub index: usize,
    pub seed: SeedVector,
    pub state: OptimizerState,
}

impl ParticleTask {
    pub fn new(sim: &dyn Simulator, config: &OptimizerConfig, master_seed: u64, index: usize) -> Self {
        let streams = ParticleSeedStream::new(master_seed, index as u64);
        let seed = SeedVector::sample(sim.d_u(), &mut streams.rng(StreamLabel::Seed));
        let theta0 = sim.prior().sample(&mut streams.rng(StreamLabel::Init));
        let state = OptimizerState::new(theta0, config, streams.rng(StreamLabel::Proposal));
        Self { index, seed, state }
    }

    pub fn advance(
        &mut self,
        sim: &dyn Simulator,
        y: &[f64],
        kernel: &DiscrepancyKernel,
        config: &OptimizerConfig,
        budget: u64,
    ) -> Result<u64> {
        self.state.advance(sim, y, &self.seed, kernel, config, budget)
    }
}

pub(crate) fn ensemble_of(
    tasks: &[ParticleTask],
    sim: &dyn Simulator,
    y: &[f64],
    kernel: &DiscrepancyKernel,
) -> Result<WeightedEnsemble> {
    let results = tasks
        .iter()
        .map(|t| (t.seed.clone(), t.state.result(kernel)))
        .collect();
    build_ensemble(results, y, kernel, sim.prior())
}

/// Runs every particle independently to the per-particle budget.
pub fn run_batch(
    plan: &RunPlan,
    sim: &dyn Simulator,
    y: &[f64],
    kernel: &DiscrepancyKernel,
    config: &OptimizerConfig,
) -> Result<BatchRun> {
    run_batch_with_progress(plan, sim, y, kernel, config, &|_| {})
}

pub fn run_batch_with_progress(
    plan: &RunPlan,
    sim: &dyn Simulator,
    y: &[f64],
    kernel: &DiscrepancyKernel,
    config: &OptimizerConfig,
    progress: &(dyn Fn(ProgressEvent) + Sync),
) -> Result<BatchRun> {
    plan.validate()?;
    config.validate()?;
    let counted = Counted::new(sim);
    let pool = WorkerPool::new(plan.n_workers);
    let tasks = pool
        .map(plan.n_particles, |i| {
            let mut task = ParticleTask::new(&counted, config, plan.master_seed, i);
            task.advance(&counted, y, kernel, config, plan.per_particle_budget)?;
            progress(ProgressEvent {
                particle: i,
                discrepancy: task.state.discrepancy(),
                sim_count: task.state.sim_count(),
            });
            Ok(task)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let ensemble = ensemble_of(&tasks, sim, y, kernel)?;
    Ok(BatchRun {
        ensemble,
        simulator_calls: counted.calls(),
    })
}
