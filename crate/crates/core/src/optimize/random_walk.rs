use super::{Ctx, OptimizerState};
use crate::prior::standard_normal_vec;

/// Out-of-support proposals allowed per call without any simulation.
const MAX_FREE_REJECTIONS: u32 = 100_000;

impl OptimizerState {
    /// Greedy descent: `θ' = θ + scale·σ_prior ⊙ z`, kept iff `ρ` drops.
    pub(super) fn advance_random_walk(&mut self, ctx: &mut Ctx<'_>) {
        if self.stalled || !self.ensure_evaluated(ctx) {
            return;
        }
        let d = ctx.sim.d_theta();
        let tol = ctx.config.stop_tol(ctx.kernel);
        let prior = ctx.sim.prior();
        let prior_scale = prior.scale();
        let mut free_rejections = 0;
        while self.rho > tol && ctx.remaining() > d as u64 {
            let z = standard_normal_vec(d, &mut self.proposals);
            let candidate: Vec<f64> = self
                .theta
                .iter()
                .zip(&z)
                .zip(&prior_scale)
                .map(|((t, z), s)| t + self.rw_scale * s * z)
                .collect();
            let improved = if prior.in_support(&candidate) {
                match self.evaluate(ctx, &candidate) {
                    Some((f, rho)) if rho < self.rho => {
                        self.accept(candidate, f, rho);
                        true
                    }
                    _ => false,
                }
            } else {
                free_rejections += 1;
                if free_rejections > MAX_FREE_REJECTIONS {
                    self.stalled = true;
                    return;
                }
                false
            };
            if improved {
                self.rw_streak = 0;
            } else {
                self.rw_streak += 1;
                if self.rw_streak >= ctx.config.rw_patience {
                    self.rw_scale *= ctx.config.rw_decay;
                    self.rw_streak = 0;
                }
            }
        }
    }
}
