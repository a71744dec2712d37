use nalgebra::{DMatrix, DVector};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_chacha::ChaCha8Rng;

use super::rejection::{draw_until_accepted, slot_rng};
use super::{EpsilonSchedule, Round, RoundReport, SamplerRun};
use crate::ensemble::WeightedEnsemble;
use crate::error::{OmcError, Result};
use crate::kernel::DiscrepancyKernel;
use crate::parallel::{RunPlan, WorkerPool};
use crate::prior::standard_normal_vec;
use crate::simulators::Simulator;
use crate::types::Particle;

/// Gaussian perturbation kernel `N(0, 2 Σ̂)` fitted to a weighted population.
struct Perturbation {
    chol: DMatrix<f64>,
    log_norm: f64,
}

impl Perturbation {
    fn fit(ensemble: &WeightedEnsemble) -> Self {
        let d = ensemble.particles()[0].theta_opt.len();
        let mean = ensemble.mean();
        let mut cov = DMatrix::<f64>::zeros(d, d);
        for (p, &w) in ensemble.particles().iter().zip(ensemble.weights()) {
            if w == 0.0 {
                continue;
            }
            let dev = DVector::from_iterator(d, p.theta_star.iter().zip(&mean).map(|(t, m)| t - m));
            cov += w * &dev * dev.transpose();
        }
        cov *= 2.0;
        // a degenerate population still needs a proper kernel
        let jitter = 1e-12 * (1.0 + cov.trace() / d as f64);
        let mut added = 0.0;
        let chol = loop {
            if let Some(c) = cov.clone().cholesky() {
                break c.l();
            }
            added = if added == 0.0 { jitter } else { added * 10.0 };
            cov += DMatrix::identity(d, d) * added;
        };
        let log_norm = -chol.diagonal().iter().map(|l| l.ln()).sum::<f64>()
            - 0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln();
        Self { chol, log_norm }
    }

    fn perturb(&self, center: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
        let z = DVector::from_vec(standard_normal_vec(center.len(), rng));
        let step = &self.chol * z;
        center.iter().zip(step.iter()).map(|(c, s)| c + s).collect()
    }

    fn log_density(&self, x: &[f64], center: &[f64]) -> f64 {
        let dev = DVector::from_iterator(x.len(), x.iter().zip(center).map(|(a, b)| a - b));
        let z = self
            .chol
            .solve_lower_triangular(&dev)
            .expect("Cholesky factor has a positive diagonal");
        self.log_norm - 0.5 * z.norm_squared()
    }
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Population Monte Carlo ABC.
///
/// Round 0 is rejection sampling at `ε₀`. Each later round resamples the
/// previous population by weight, perturbs with a Gaussian of covariance
/// twice the weighted empirical covariance, simulates until `ρ ≤ ε_t` or
/// `plan.per_particle_budget` calls, and weights the accepted draws by
/// `p(θ) / Σ_j w_j K(θ | θ_j)`.
///
/// SS in each report is cumulative: all calls so far divided by the number
/// of samples accepted in that round.
pub fn smc_abc(
    plan: &RunPlan,
    sim: &dyn Simulator,
    y: &[f64],
    kernel: &DiscrepancyKernel,
    schedule: &EpsilonSchedule,
) -> Result<SamplerRun> {
    plan.validate()?;
    let n = plan.n_particles;
    let cap = plan.per_particle_budget;
    let prior = sim.prior();
    let pool = WorkerPool::new(plan.n_workers);
    let mut rounds: Vec<Round> = Vec::with_capacity(schedule.len());
    let mut total: u64 = 0;

    for (t, &eps) in schedule.values().iter().enumerate() {
        let kernel_t = kernel.with_epsilon(eps)?;
        let previous = rounds.last().map(|r| &r.ensemble);
        let slots = match previous {
            None => pool.map(n, |i| {
                let mut rng = slot_rng(plan.master_seed, t, i);
                draw_until_accepted(sim, y, &kernel_t, cap, &mut rng, |r: &mut ChaCha8Rng| {
                    Some(prior.sample(r))
                })
            }),
            Some(prev) => {
                let perturbation = Perturbation::fit(prev);
                let index = WeightedIndex::new(prev.weights())
                    .map_err(|e| OmcError::InvalidArgument(format!("resampling weights: {e}")))?;
                let (perturbation, index) = (&perturbation, &index);
                pool.map(n, |i| {
                    let mut rng = slot_rng(plan.master_seed, t, i);
                    let mut slot = draw_until_accepted(sim, y, &kernel_t, cap, &mut rng, |r: &mut ChaCha8Rng| {
                        let j = index.sample(r);
                        let theta = perturbation.perturb(&prev.particles()[j].theta_star, r);
                        prior.in_support(&theta).then_some(theta)
                    })?;
                    if slot.particle.accepted {
                        slot.particle.log_weight = importance_log_weight(&slot.particle, prev, perturbation, sim);
                    }
                    Ok(slot)
                })
            }
        }
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

        let round_sims: u64 = slots.iter().map(|s| s.particle.sim_count).sum();
        total += round_sims;
        let particles: Vec<Particle> = slots.into_iter().map(|s| s.particle).collect();
        let accepted = particles.iter().filter(|p| p.accepted).count();
        let ensemble = WeightedEnsemble::normalize(particles, eps)?;
        if t + 1 < schedule.len() && ensemble.ess() < 2.0 {
            return Err(OmcError::PopulationCollapse {
                round: t,
                ess: ensemble.ess(),
            });
        }
        let report = RoundReport::new(t, &ensemble, round_sims, total, total as f64 / accepted as f64);
        log::info!(
            "smc round {t}: eps={eps} accepted={accepted} ess={:.1} ss={:.2}",
            report.ess,
            report.ss_mean
        );
        rounds.push(Round { report, ensemble });
    }
    Ok(SamplerRun { rounds })
}

fn importance_log_weight(p: &Particle, prev: &WeightedEnsemble, k: &Perturbation, sim: &dyn Simulator) -> f64 {
    let theta = &p.theta_star;
    let denom = log_sum_exp(
        prev.particles()
            .iter()
            .zip(prev.weights())
            .filter(|(_, &w)| w > 0.0)
            .map(|(q, &w)| w.ln() + k.log_density(theta, &q.theta_star)),
    );
    sim.prior().log_density(theta) - denom
}
