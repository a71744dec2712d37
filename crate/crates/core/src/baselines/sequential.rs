use super::{EpsilonSchedule, Round, RoundReport, SamplerRun};
use crate::error::Result;
use crate::kernel::DiscrepancyKernel;
use crate::optimize::OptimizerConfig;
use crate::parallel::{ensemble_of, ParticleTask, RunPlan, WorkerPool};
use crate::simulators::Simulator;

/// OMC run in ε rounds.
///
/// Every particle keeps its seed for the whole run. In round `t` only the
/// particles with `ρ > ε_t` resume optimizing from where they stopped, with
/// `config.max_sims_per_round` fresh calls each; the ensemble is then
/// rebuilt at `ε_t`. Simulation counts accumulate across rounds.
pub fn sequential_omc(
    plan: &RunPlan,
    sim: &dyn Simulator,
    y: &[f64],
    kernel: &DiscrepancyKernel,
    config: &OptimizerConfig,
    schedule: &EpsilonSchedule,
) -> Result<SamplerRun> {
    plan.validate()?;
    config.validate()?;
    let n = plan.n_particles;
    let pool = WorkerPool::new(plan.n_workers);
    let mut tasks: Vec<ParticleTask> = (0..n)
        .map(|i| ParticleTask::new(sim, config, plan.master_seed, i))
        .collect();
    let mut rounds = Vec::with_capacity(schedule.len());
    let mut total: u64 = 0;

    for (t, &eps) in schedule.values().iter().enumerate() {
        let kernel_t = kernel.with_epsilon(eps)?;
        let advanced = pool
            .map(n, |i| {
                let mut task = tasks[i].clone();
                if !kernel_t.accepts(task.state.discrepancy()) && !task.state.is_stalled() {
                    task.advance(sim, y, &kernel_t, config, config.max_sims_per_round)?;
                }
                Ok(task)
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let before = total;
        tasks = advanced;
        total = tasks.iter().map(|t| t.state.sim_count()).sum();
        let ensemble = ensemble_of(&tasks, sim, y, &kernel_t)?;
        let report = RoundReport::new(t, &ensemble, total - before, total, total as f64 / n as f64);
        log::info!(
            "omc round {t}: eps={eps} accepted={} ess={:.1} ss={:.2}",
            ensemble.accepted_count(),
            report.ess,
            report.ss_mean
        );
        rounds.push(Round { report, ensemble });
    }
    Ok(SamplerRun { rounds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulators::{Exponential, ExponentialOptions};

    #[test]
    fn rounds_only_spend_on_unfinished_particles() {
        let sim = Exponential::new(ExponentialOptions::default()).unwrap();
        let y = sim.observed().0.clone();
        let plan = RunPlan::batch(9, 100, 1, 1000);
        let config = OptimizerConfig {
            convergence_tol: None,
            ..OptimizerConfig::default()
        };
        let schedule = EpsilonSchedule::new(vec![1.0, 0.1, 0.01]).unwrap();
        let run = sequential_omc(&plan, &sim, &y, &DiscrepancyKernel::new(1.0).unwrap(), &config, &schedule).unwrap();
        let mut prev: Option<Vec<(f64, u64)>> = None;
        for round in &run.rounds {
            let cur: Vec<(f64, u64)> = round
                .ensemble
                .particles()
                .iter()
                .map(|p| (p.discrepancy, p.sim_count))
                .collect();
            if let Some(prev) = &prev {
                for (&(r0, s0), &(r1, s1)) in prev.iter().zip(&cur) {
                    assert!(r1 <= r0);
                    if r0 <= round.report.epsilon {
                        assert_eq!(s0, s1);
                    }
                }
            }
            prev = Some(cur);
        }
    }
}
