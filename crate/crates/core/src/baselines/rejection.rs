use rand_chacha::ChaCha8Rng;

use super::{Round, RoundReport, SamplerRun};
use crate::ensemble::WeightedEnsemble;
use crate::error::{OmcError, Result};
use crate::kernel::{discrepancy, DiscrepancyKernel};
use crate::parallel::{ParticleSeedStream, RunPlan, StreamLabel, WorkerPool};
use crate::simulators::Simulator;
use crate::types::{Parameters, Particle, SeedVector, Statistics};

/// Out-of-support proposals tolerated per simulator call before a slot
/// gives up.
const MAX_PROPOSALS_PER_SIM: u64 = 100;

/// Outcome of one slot of a draw-until-accept sampler.
pub(super) struct Slot {
    pub particle: Particle,
    pub best: f64,
}

/// Draws `θ` from `propose` and a fresh `u` from `rng` until `ρ ≤ ε` or
/// `cap` simulator calls are spent. `propose` returns `None` for draws
/// outside the prior support, which cost no simulation.
pub(super) fn draw_until_accepted<P>(
    sim: &dyn Simulator,
    y: &[f64],
    kernel: &DiscrepancyKernel,
    cap: u64,
    rng: &mut ChaCha8Rng,
    mut propose: P,
) -> Result<Slot>
where
    P: FnMut(&mut ChaCha8Rng) -> Option<Vec<f64>>,
{
    let mut sims = 0;
    let mut proposals = 0;
    let mut best = f64::INFINITY;
    while sims < cap && proposals < cap.saturating_mul(MAX_PROPOSALS_PER_SIM) {
        proposals += 1;
        let Some(theta) = propose(rng) else { continue };
        let u = SeedVector::sample(sim.d_u(), rng);
        sims += 1;
        let Ok(x) = sim.forward(&theta, &u) else { continue };
        let rho = discrepancy(y, &x, kernel)?;
        best = best.min(rho);
        if kernel.accepts(rho) {
            return Ok(Slot {
                particle: Particle {
                    seed: u,
                    theta_opt: Parameters(theta.clone()),
                    theta_star: Parameters(theta),
                    f_at_opt: x,
                    discrepancy: rho,
                    jacobian: None,
                    log_weight: 0.0,
                    sim_count: sims,
                    accepted: true,
                    projection_fallback: false,
                    diagnostic: None,
                },
                best,
            });
        }
    }
    let d = sim.d_theta();
    Ok(Slot {
        particle: Particle {
            seed: SeedVector::new(Vec::new())?,
            theta_opt: Parameters(vec![f64::NAN; d]),
            theta_star: Parameters(vec![f64::NAN; d]),
            f_at_opt: Statistics(Vec::new()),
            discrepancy: best,
            jacobian: None,
            log_weight: f64::NEG_INFINITY,
            sim_count: sims,
            accepted: false,
            projection_fallback: false,
            diagnostic: Some(format!("not accepted within {sims} simulations")),
        },
        best,
    })
}

/// Stream for slot `slot` of round `round`.
pub(super) fn slot_rng(master_seed: u64, round: usize, slot: usize) -> ChaCha8Rng {
    ParticleSeedStream::new(master_seed, ((round as u64) << 32) | slot as u64).rng(StreamLabel::Sampler)
}

/// Rejection ABC with `plan.n_particles` independent slots.
///
/// Each slot draws `θ ~ p(θ)` and `u ~ U(0,1)` from its own stream until it
/// is accepted or has used its share `⌈total_sim_budget / n⌉` of the budget.
/// Accepted particles get equal weight. SS is total calls over accepted
/// samples.
pub fn rejection_abc(plan: &RunPlan, sim: &dyn Simulator, y: &[f64], kernel: &DiscrepancyKernel) -> Result<SamplerRun> {
    plan.validate()?;
    let n = plan.n_particles;
    let cap = plan.total_sim_budget.div_ceil(n as u64);
    let prior = sim.prior();
    let pool = WorkerPool::new(plan.n_workers);
    let slots = pool
        .map(n, |i| {
            let mut rng = slot_rng(plan.master_seed, 0, i);
            draw_until_accepted(sim, y, kernel, cap, &mut rng, |r: &mut ChaCha8Rng| Some(prior.sample(r)))
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let total: u64 = slots.iter().map(|s| s.particle.sim_count).sum();
    let best = slots.iter().map(|s| s.best).fold(f64::INFINITY, f64::min);
    let particles: Vec<Particle> = slots.into_iter().map(|s| s.particle).collect();
    let accepted = particles.iter().filter(|p| p.accepted).count();
    if accepted == 0 {
        return Err(OmcError::NoAcceptance { sims: total, best });
    }
    let ensemble = WeightedEnsemble::normalize(particles, kernel.epsilon())?;
    let report = RoundReport::new(0, &ensemble, total, total, total as f64 / accepted as f64);
    Ok(SamplerRun {
        rounds: vec![Round { report, ensemble }],
    })
}
