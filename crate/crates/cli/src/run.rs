use omc::baselines::{rejection_abc, sequential_omc, smc_abc, RoundReport, SamplerRun};
use omc::ensemble::WeightedEnsemble;
use omc::parallel::{run_anytime, run_batch_with_progress, AnytimeOptions, Mode, ProgressEvent, RunPlan};
use omc::simulators::Simulator;
use omc::OmcError;
use serde::Serialize;

use crate::settings::{Algorithm, Settings};
use crate::CliResult;

/// Anytime checkpoint summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SnapshotSummary {
    pub quanta: u64,
    pub sims_used: u64,
    pub max_discrepancy: f64,
    pub accepted: usize,
    pub ess: Option<f64>,
}

/// Result of one configured run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub ensemble: WeightedEnsemble,
    pub rounds: Vec<RoundReport>,
    /// Calls made in rounds before the last, which are not visible in the
    /// final particles' `sim_count`.
    pub sims_prior_rounds: u64,
    /// Divisor of the SS figure: all particles for OMC, accepted samples for
    /// the baselines.
    pub ss_denominator: usize,
    pub snapshots: Vec<SnapshotSummary>,
}

impl Outcome {
    pub fn ss_mean(&self) -> f64 {
        (self.sims_prior_rounds + self.ensemble.total_sims()) as f64 / self.ss_denominator as f64
    }

    fn from_rounds(run: SamplerRun, per_particle: bool) -> Self {
        let rounds = run.reports();
        let last = run.last();
        let prior = if per_particle {
            0
        } else {
            last.report.total_sims - last.report.round_sims
        };
        let ensemble = last.ensemble.clone();
        let ss_denominator = if per_particle {
            ensemble.len()
        } else {
            ensemble.accepted_count()
        };
        Self {
            ensemble,
            rounds,
            sims_prior_rounds: prior,
            ss_denominator,
            snapshots: Vec::new(),
        }
    }
}

fn log_progress(e: ProgressEvent) {
    log::debug!("particle {} rho={:.4e} sims={}", e.particle, e.discrepancy, e.sim_count);
}

/// Runs the configured algorithm on `sim`.
pub fn execute(settings: &Settings, sim: &dyn Simulator) -> CliResult<Outcome> {
    let y = sim.observed().0.clone();
    let schedule = settings.schedule(sim)?;
    let final_eps = schedule.last();
    let kernel = settings.kernel(sim, final_eps)?;
    let config = &settings.optimizer;
    let batch_plan = RunPlan::batch(settings.seed, settings.n, settings.workers, settings.per_particle_budget());
    let budget_plan = RunPlan {
        total_sim_budget: settings.total_budget(),
        ..batch_plan.clone()
    };

    let outcome = match (settings.alg, settings.mode) {
        (Algorithm::Omc, Mode::Batch) => {
            let run = run_batch_with_progress(&batch_plan, sim, &y, &kernel, config, &log_progress)?;
            let ens = run.ensemble;
            let report = RoundReport::new(0, &ens, ens.total_sims(), ens.total_sims(), ens.ss_mean());
            Outcome {
                ss_denominator: ens.len(),
                ensemble: ens,
                rounds: vec![report],
                sims_prior_rounds: 0,
                snapshots: Vec::new(),
            }
        }
        (Algorithm::Omc, Mode::Anytime) => {
            let plan = RunPlan {
                mode: Mode::Anytime,
                ..budget_plan
            };
            let run = run_anytime(&plan, sim, &y, &kernel, config, &AnytimeOptions::default(), &log_progress)?;
            let snapshots = run
                .snapshots
                .iter()
                .map(|s| SnapshotSummary {
                    quanta: s.quanta,
                    sims_used: s.sims_used,
                    max_discrepancy: s.max_discrepancy,
                    accepted: s.ensemble.as_ref().map_or(0, WeightedEnsemble::accepted_count),
                    ess: s.ensemble.as_ref().map(WeightedEnsemble::ess),
                })
                .collect();
            let ens = run
                .snapshots
                .last()
                .and_then(|s| s.ensemble.clone())
                .ok_or(OmcError::EmptyPosterior { epsilon: final_eps })?;
            let report = RoundReport::new(0, &ens, ens.total_sims(), ens.total_sims(), ens.ss_mean());
            Outcome {
                ss_denominator: ens.len(),
                ensemble: ens,
                rounds: vec![report],
                sims_prior_rounds: 0,
                snapshots,
            }
        }
        (Algorithm::OmcSeq, _) => {
            Outcome::from_rounds(sequential_omc(&batch_plan, sim, &y, &kernel, config, &schedule)?, true)
        }
        (Algorithm::Rejection, _) => Outcome::from_rounds(rejection_abc(&budget_plan, sim, &y, &kernel)?, false),
        (Algorithm::Smc, _) => Outcome::from_rounds(smc_abc(&batch_plan, sim, &y, &kernel, &schedule)?, false),
    };
    Ok(outcome)
}
