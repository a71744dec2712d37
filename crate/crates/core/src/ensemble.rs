//! Normalized weighted particle sets and the statistics computed on them.

use crate::error::{OmcError, Result};
use crate::types::Particle;

/// Tolerance on `Σ w = 1` accepted by [`ess`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// A normalized posterior ensemble.
///
/// Rejected particles stay in the list with weight exactly zero so that
/// acceptance fractions and simulation counts remain available.
#[derive(Debug, Clone)]
pub struct WeightedEnsemble {
    particles: Vec<Particle>,
    weights: Vec<f64>,
    log_kappa: f64,
    epsilon: f64,
    ess: f64,
}

impl WeightedEnsemble {
    /// Normalizes the particles' log weights.
    ///
    /// `κ = Σ raw_weight` is accumulated in log space after subtracting the
    /// largest log weight, so extreme Jacobian volumes neither overflow nor
    /// underflow.
    pub fn normalize(particles: Vec<Particle>, epsilon: f64) -> Result<Self> {
        let max = particles
            .iter()
            .filter(|p| p.accepted)
            .map(|p| p.log_weight)
            .fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(OmcError::EmptyPosterior { epsilon });
        }
        let shifted: Vec<f64> = particles
            .iter()
            .map(|p| {
                if p.accepted {
                    (p.log_weight - max).exp()
                } else {
                    0.0
                }
            })
            .collect();
        let total: f64 = shifted.iter().sum();
        let weights: Vec<f64> = shifted.iter().map(|w| w / total).collect();
        let ess = ess(&weights)?;
        Ok(Self {
            particles,
            weights,
            log_kappa: max + total.ln(),
            epsilon,
            ess,
        })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn into_particles(self) -> Vec<Particle> {
        self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kappa(&self) -> f64 {
        self.log_kappa.exp()
    }

    pub fn log_kappa(&self) -> f64 {
        self.log_kappa
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn ess(&self) -> f64 {
        self.ess
    }

    pub fn ess_over_n(&self) -> f64 {
        self.ess / self.len() as f64
    }

    pub fn accepted_count(&self) -> usize {
        self.particles.iter().filter(|p| p.accepted).count()
    }

    pub fn acceptance_fraction(&self) -> f64 {
        self.accepted_count() as f64 / self.len() as f64
    }

    pub fn total_sims(&self) -> u64 {
        self.particles.iter().map(|p| p.sim_count).sum()
    }

    /// Mean simulator calls per particle (SS).
    pub fn ss_mean(&self) -> f64 {
        self.total_sims() as f64 / self.len() as f64
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.particles
            .iter()
            .map(|p| p.discrepancy)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Weighted mean of `θ*`.
    pub fn mean(&self) -> Vec<f64> {
        posterior_expectation(|t| t.to_vec(), self).expect("θ* entries are finite")
    }

    /// Weighted variance of each coordinate of `θ*`.
    pub fn variance(&self) -> Vec<f64> {
        let mean = self.mean();
        posterior_expectation(
            |t| t.iter().zip(&mean).map(|(a, m)| (a - m).powi(2)).collect(),
            self,
        )
        .expect("θ* entries are finite")
    }
}

/// `1 / Σ w²` for a normalized weight vector.
pub fn ess(weights: &[f64]) -> Result<f64> {
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL || weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(OmcError::Unnormalized { sum });
    }
    Ok(1.0 / weights.iter().map(|w| w * w).sum::<f64>())
}

/// `Σ_i w_i h(θ*_i)` over accepted particles.
pub fn posterior_expectation<H>(h: H, ensemble: &WeightedEnsemble) -> Result<Vec<f64>>
where
    H: Fn(&[f64]) -> Vec<f64>,
{
    let mut acc: Option<Vec<f64>> = None;
    for (index, (p, &w)) in ensemble.particles.iter().zip(&ensemble.weights).enumerate() {
        if w == 0.0 {
            continue;
        }
        let value = h(&p.theta_star);
        if value.iter().any(|v| !v.is_finite()) {
            return Err(OmcError::NonFinite { index });
        }
        match acc.as_mut() {
            None => acc = Some(value.iter().map(|v| w * v).collect()),
            Some(a) => {
                if a.len() != value.len() {
                    return Err(OmcError::DimensionMismatch {
                        what: "posterior_expectation output",
                        expected: a.len(),
                        found: value.len(),
                    });
                }
                a.iter_mut().zip(&value).for_each(|(a, v)| *a += w * v);
            }
        }
    }
    acc.ok_or(OmcError::EmptyPosterior {
        epsilon: ensemble.epsilon,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::types::{Parameters, SeedVector, Statistics};
    use proptest::prelude::*;

    pub(crate) fn particle(theta: f64, raw_weight: Option<f64>) -> Particle {
        Particle {
            seed: SeedVector::new(vec![0.5]).unwrap(),
            theta_opt: Parameters(vec![theta]),
            theta_star: Parameters(vec![theta]),
            f_at_opt: Statistics(vec![0.0]),
            discrepancy: if raw_weight.is_some() { 0.0 } else { 1.0 },
            jacobian: None,
            log_weight: raw_weight.map_or(f64::NEG_INFINITY, f64::ln),
            sim_count: 1,
            accepted: raw_weight.is_some(),
            projection_fallback: false,
            diagnostic: None,
        }
    }

    #[test]
    fn ess_examples() {
        assert!((ess(&vec![1.0 / 5000.0; 5000]).unwrap() - 5000.0).abs() < 1e-6);
        assert_eq!(ess(&[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!((ess(&[0.5, 0.25, 0.25]).unwrap() - 1.0 / 0.375).abs() < 1e-12);
        assert!(matches!(ess(&[0.5, 0.4]), Err(OmcError::Unnormalized { .. })));
    }

    #[test]
    fn normalize_examples() {
        let e = WeightedEnsemble::normalize(vec![particle(0.0, Some(2.0)), particle(1.0, Some(2.0))], 0.1)
            .unwrap();
        assert_eq!(e.weights(), &[0.5, 0.5]);
        assert!((e.kappa() - 4.0).abs() < 1e-12);

        let e = WeightedEnsemble::normalize(
            vec![particle(0.0, Some(1.0)), particle(1.0, None), particle(2.0, Some(3.0))],
            0.1,
        )
        .unwrap();
        assert!((e.weights()[0] - 0.25).abs() < 1e-15);
        assert_eq!(e.weights()[1], 0.0);
        assert!((e.weights()[2] - 0.75).abs() < 1e-15);
        assert!((e.kappa() - 4.0).abs() < 1e-12);
        assert!((e.acceptance_fraction() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_posterior_names_epsilon() {
        let err = WeightedEnsemble::normalize(vec![particle(0.0, None), particle(1.0, None)], 0.025)
            .unwrap_err();
        assert!(err.to_string().contains("0.025"));
        assert!(WeightedEnsemble::normalize(vec![particle(0.0, Some(0.0))], 0.1).is_err());
    }

    #[test]
    fn expectation_examples() {
        let e = WeightedEnsemble::normalize(vec![particle(0.0, Some(1.0)), particle(2.0, Some(1.0))], 0.1)
            .unwrap();
        assert_eq!(posterior_expectation(|t| t.to_vec(), &e).unwrap(), vec![1.0]);
        let c = posterior_expectation(|_| vec![3.5, -1.0], &e).unwrap();
        assert_eq!(c, vec![3.5, -1.0]);
        let err = posterior_expectation(|t| vec![1.0 / (t[0] - 2.0)], &e).unwrap_err();
        assert!(matches!(err, OmcError::NonFinite { index: 1 }));
    }

    #[test]
    fn extreme_log_weights_do_not_overflow() {
        let mut a = particle(0.0, Some(1.0));
        let mut b = particle(1.0, Some(1.0));
        a.log_weight = 900.0;
        b.log_weight = 900.0 + 3f64.ln();
        let e = WeightedEnsemble::normalize(vec![a, b], 1.0).unwrap();
        assert!((e.weights()[1] - 0.75).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn ess_bounds_and_permutation(raw in prop::collection::vec(0.0f64..10.0, 1..40), rot in 0usize..40) {
            let total: f64 = raw.iter().sum();
            prop_assume!(total > 1e-6);
            let w: Vec<f64> = raw.iter().map(|r| r / total).collect();
            let e = ess(&w).unwrap();
            prop_assert!(e >= 1.0 - 1e-9 && e <= w.len() as f64 + 1e-9);
            let mut rotated = w.clone();
            rotated.rotate_left(rot % w.len());
            prop_assert!((ess(&rotated).unwrap() - e).abs() <= 1e-9 * e);
        }

        #[test]
        fn rescaling_raw_weights_is_invisible(
            raw in prop::collection::vec(0.01f64..10.0, 2..30),
            log_c in -50.0f64..50.0,
        ) {
            let base: Vec<Particle> = raw.iter().enumerate().map(|(i, r)| particle(i as f64, Some(*r))).collect();
            let scaled: Vec<Particle> = base.iter().cloned().map(|mut p| { p.log_weight += log_c; p }).collect();
            let a = WeightedEnsemble::normalize(base, 1.0).unwrap();
            let b = WeightedEnsemble::normalize(scaled, 1.0).unwrap();
            for (x, y) in a.weights().iter().zip(b.weights()) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
            prop_assert!((a.ess() - b.ess()).abs() <= 1e-12 * a.ess());
            let ma = posterior_expectation(|t| vec![t[0], t[0] * t[0]], &a).unwrap();
            let mb = posterior_expectation(|t| vec![t[0], t[0] * t[0]], &b).unwrap();
            for (x, y) in ma.iter().zip(&mb) {
                prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
            }
        }

        #[test]
        fn expectation_is_linear(
            raw in prop::collection::vec(0.01f64..10.0, 2..20),
            a in -5.0f64..5.0,
            b in -5.0f64..5.0,
        ) {
            let ps: Vec<Particle> = raw.iter().enumerate().map(|(i, r)| particle(i as f64 * 0.3, Some(*r))).collect();
            let e = WeightedEnsemble::normalize(ps, 1.0).unwrap();
            let g = |t: &[f64]| vec![t[0].sin()];
            let h = |t: &[f64]| vec![t[0] * t[0]];
            let lhs = posterior_expectation(|t| vec![a * g(t)[0] + b * h(t)[0]], &e).unwrap()[0];
            let rhs = a * posterior_expectation(g, &e).unwrap()[0] + b * posterior_expectation(h, &e).unwrap()[0];
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }
}
