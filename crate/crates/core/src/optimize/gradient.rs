use super::linalg::least_squares_step;
use super::{Ctx, OptimizerState};
use crate::prior::Prior;

/// Steps never land closer than this fraction of the step to the support
/// boundary.
const BOUNDARY_GAP: f64 = 1e-9;

impl OptimizerState {
    /// Newton / Gauss-Newton iterations with backtracking on `ρ`.
    pub(super) fn advance_gradient(&mut self, ctx: &mut Ctx<'_>) {
        if self.stalled || !self.ensure_evaluated(ctx) {
            return;
        }
        if self.f.is_none() {
            // the starting point itself failed to simulate
            self.stalled = true;
            return;
        }
        let d = ctx.sim.d_theta() as u64;
        let tol = ctx.config.stop_tol(ctx.kernel);
        while self.rho > tol {
            let jac_cost = if self.jacobian_fresh { 0 } else { d };
            // a Jacobian, one trial point, and the endpoint Jacobian
            if ctx.remaining() < jac_cost + 1 + d {
                return;
            }
            if !self.jacobian_fresh && !self.refresh_jacobian(ctx) {
                self.stalled = true;
                return;
            }
            let jac = self.jacobian.as_ref().expect("fresh jacobian");
            let f = self.f.as_ref().expect("evaluated");
            let residual: Vec<f64> = f.iter().zip(ctx.y).map(|(a, b)| a - b).collect();
            let Some(dx) = least_squares_step(jac, &residual) else {
                log::debug!("singular jacobian at {:?}", self.theta);
                self.stalled = true;
                return;
            };
            let step: Vec<f64> = dx.iter().map(|v| -v).collect();

            let mut alpha = support_fraction(ctx.sim.prior(), &self.theta, &step);
            let mut improved = false;
            for _ in 0..=ctx.config.line_search_halvings {
                if ctx.remaining() < 1 + d || alpha == 0.0 {
                    break;
                }
                let candidate: Vec<f64> = self
                    .theta
                    .iter()
                    .zip(&step)
                    .map(|(t, s)| t + alpha * s)
                    .collect();
                if let Some((f_new, rho_new)) = self.evaluate(ctx, &candidate) {
                    if rho_new < self.rho {
                        let gain = self.rho - rho_new;
                        let moved = candidate
                            .iter()
                            .zip(&self.theta)
                            .any(|(a, b)| a != b);
                        let converged_now = rho_new <= tol;
                        let negligible = gain <= 1e-14 * self.rho;
                        self.accept(candidate, f_new, rho_new);
                        if !moved || (negligible && !converged_now) {
                            self.stalled = true;
                        }
                        improved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if self.stalled {
                return;
            }
            if !improved {
                // budget-limited line searches are resumed later; exhausted ones are final
                if ctx.remaining() > d {
                    self.stalled = true;
                }
                return;
            }
        }
    }
}

/// Largest `t ∈ [0, 1]` with `θ + t·step` inside the prior support, pulled
/// back from the boundary by `BOUNDARY_GAP`.
pub(crate) fn support_fraction(prior: &Prior, theta: &[f64], step: &[f64]) -> f64 {
    let at = |t: f64| -> Vec<f64> { theta.iter().zip(step).map(|(a, s)| a + t * s).collect() };
    if prior.in_support(&at(1.0)) || !prior.in_support(theta) {
        return 1.0;
    }
    let (mut inside, mut outside) = (0.0f64, 1.0f64);
    for _ in 0..64 {
        let mid = 0.5 * (inside + outside);
        if prior.in_support(&at(mid)) {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    (inside - BOUNDARY_GAP).max(0.0)
}
