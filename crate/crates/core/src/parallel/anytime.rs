use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{ensemble_of, ParticleTask, ProgressEvent, RunPlan, WorkerPool};
use crate::ensemble::WeightedEnsemble;
use crate::error::{OmcError, Result};
use crate::kernel::DiscrepancyKernel;
use crate::optimize::OptimizerConfig;
use crate::simulators::{Counted, Simulator};

#[derive(Debug, Clone, PartialEq)]
pub struct AnytimeOptions {
    /// Simulator calls granted per scheduling decision.
    pub quantum: u64,
    /// Emit a snapshot after this many granted quanta.
    pub checkpoint_every: u64,
    /// Quanta handed out together, to the `wave` worst particles. Results do
    /// not depend on the worker count, only on this value.
    pub wave: usize,
}

impl Default for AnytimeOptions {
    fn default() -> Self {
        Self {
            quantum: 25,
            checkpoint_every: 100,
            wave: 1,
        }
    }
}

/// Ensemble state after some number of granted quanta.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub quanta: u64,
    pub sims_used: u64,
    pub max_discrepancy: f64,
    /// `None` while no particle is accepted.
    pub ensemble: Option<WeightedEnsemble>,
}

#[derive(Debug, Clone)]
pub struct AnytimeRun {
    pub snapshots: Vec<Snapshot>,
    pub simulator_calls: u64,
}

impl AnytimeRun {
    /// The last snapshot with an ensemble.
    pub fn latest(&self) -> Option<&WeightedEnsemble> {
        self.snapshots.iter().rev().find_map(|s| s.ensemble.as_ref())
    }
}

/// Max-heap entry: largest discrepancy first, lowest index on ties.
#[derive(Debug, PartialEq)]
struct Worst {
    rho: f64,
    index: usize,
}

impl Eq for Worst {}

impl Ord for Worst {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rho
            .total_cmp(&other.rho)
            .then_with(|| other.index.cmp(&self.index))
    }
}

impl PartialOrd for Worst {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Repeatedly grants one quantum to the particle with the largest
/// discrepancy until the global budget is spent or every particle is within
/// ε (or can make no further progress).
///
/// A particle leaves the queue once `ρ ≤ ε` with its Jacobian computed, once its optimizer stalls, or
/// once it has used `config.max_sims_per_round` calls in total.
pub fn run_anytime(
    plan: &RunPlan,
    sim: &dyn Simulator,
    y: &[f64],
    kernel: &DiscrepancyKernel,
    config: &OptimizerConfig,
    options: &AnytimeOptions,
    progress: &(dyn Fn(ProgressEvent) + Sync),
) -> Result<AnytimeRun> {
    plan.validate()?;
    config.validate()?;
    if options.quantum == 0 || options.checkpoint_every == 0 || options.wave == 0 {
        return Err(OmcError::InvalidArgument(format!("invalid anytime options {options:?}")));
    }
    let counted = Counted::new(sim);
    let pool = WorkerPool::new(plan.n_workers);
    let mut tasks: Vec<ParticleTask> = (0..plan.n_particles)
        .map(|i| ParticleTask::new(&counted, config, plan.master_seed, i))
        .collect();
    let mut queue: BinaryHeap<Worst> = (0..plan.n_particles)
        .map(|index| Worst {
            rho: f64::INFINITY,
            index,
        })
        .collect();

    let mut snapshots = Vec::new();
    let mut used: u64 = 0;
    let mut quanta: u64 = 0;
    let snapshot = |tasks: &[ParticleTask], quanta: u64, used: u64| Snapshot {
        quanta,
        sims_used: used,
        max_discrepancy: tasks
            .iter()
            .map(|t| t.state.discrepancy())
            .fold(f64::NEG_INFINITY, f64::max),
        ensemble: ensemble_of(tasks, sim, y, kernel).ok(),
    };

    while used < plan.total_sim_budget {
        let mut grants = Vec::with_capacity(options.wave);
        let mut granted = 0;
        while grants.len() < options.wave && used + granted < plan.total_sim_budget {
            let Some(worst) = queue.pop() else { break };
            let budget = options.quantum.min(plan.total_sim_budget - used - granted);
            granted += budget;
            grants.push((worst.index, budget));
        }
        if grants.is_empty() {
            break;
        }

        let outcomes = pool.map(grants.len(), |k| {
            let (index, budget) = grants[k];
            let mut task = tasks[index].clone();
            let spent = task.advance(&counted, y, kernel, config, budget);
            (task, spent)
        });

        for (task, spent) in outcomes {
            let spent = spent?;
            used += spent;
            quanta += 1;
            let index = task.index;
            let rho = task.state.discrepancy();
            progress(ProgressEvent {
                particle: index,
                discrepancy: rho,
                sim_count: task.state.sim_count(),
            });
            let retire = (kernel.accepts(rho) && task.state.has_jacobian())
                || task.state.is_stalled()
                || task.state.sim_count() >= config.max_sims_per_round
                || spent == 0;
            tasks[index] = task;
            if !retire {
                queue.push(Worst { rho, index });
            }
            if quanta.is_multiple_of(options.checkpoint_every) {
                snapshots.push(snapshot(&tasks, quanta, used));
            }
        }
    }
    if snapshots.last().is_none_or(|s| s.quanta != quanta) {
        snapshots.push(snapshot(&tasks, quanta, used));
    }
    Ok(AnytimeRun {
        snapshots,
        simulator_calls: counted.calls(),
    })
}
