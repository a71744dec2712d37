//! Weighted summaries of an ensemble: quantiles, histograms, CDF distances,
//! Monte Carlo standard errors and posterior-predictive bands.

use serde::Serialize;

use crate::ensemble::WeightedEnsemble;
use crate::error::{OmcError, Result};
use crate::parallel::{ParticleSeedStream, StreamLabel};
use crate::simulators::Simulator;
use crate::types::SeedVector;

pub const HISTOGRAM_BINS: usize = 100;
pub const HISTOGRAM_RANGE: (f64, f64) = (0.001, 0.999);

/// `(value, weight)` pairs with positive weight, sorted by value.
fn sorted_pairs(values: &[f64], weights: &[f64]) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = values
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&v, &w)| (v, w))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs
}

/// Smallest value whose cumulative weight reaches `q` of the total.
pub fn weighted_quantile(values: &[f64], weights: &[f64], q: f64) -> Option<f64> {
    let pairs = sorted_pairs(values, weights);
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let target = q.clamp(0.0, 1.0) * total;
    let mut acc = 0.0;
    for &(v, w) in &pairs {
        acc += w;
        if acc >= target {
            return Some(v);
        }
    }
    pairs.last().map(|p| p.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub density: f64,
}

/// Weighted density histogram over the weighted quantile range
/// `HISTOGRAM_RANGE`. Mass outside the range is dropped and the remainder
/// renormalized, so the densities integrate to one.
pub fn weighted_histogram(values: &[f64], weights: &[f64], bins: usize) -> Result<Vec<HistogramBin>> {
    if values.len() != weights.len() {
        return Err(OmcError::DimensionMismatch {
            what: "histogram weights",
            expected: values.len(),
            found: weights.len(),
        });
    }
    if bins == 0 {
        return Err(OmcError::InvalidArgument("histogram needs at least one bin".into()));
    }
    let (Some(mut lo), Some(mut hi)) = (
        weighted_quantile(values, weights, HISTOGRAM_RANGE.0),
        weighted_quantile(values, weights, HISTOGRAM_RANGE.1),
    ) else {
        return Err(OmcError::InvalidArgument("histogram of an empty ensemble".into()));
    };
    if hi <= lo {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let mut mass = vec![0.0; bins];
    for (&v, &w) in values.iter().zip(weights) {
        if w > 0.0 && v >= lo && v <= hi {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            mass[k] += w;
        }
    }
    let inside: f64 = mass.iter().sum();
    Ok(mass
        .iter()
        .enumerate()
        .map(|(k, m)| HistogramBin {
            bin_left: lo + k as f64 * width,
            bin_right: if k + 1 == bins { hi } else { lo + (k + 1) as f64 * width },
            density: m / (inside * width),
        })
        .collect())
}

/// `θ*` coordinate `k` of every particle.
pub fn coordinate(ensemble: &WeightedEnsemble, k: usize) -> Vec<f64> {
    ensemble.particles().iter().map(|p| p.theta_star[k]).collect()
}

/// Kolmogorov distance `sup |F̂ − F|` between the weighted empirical CDF of
/// `values` and `cdf`.
pub fn kolmogorov_distance<F: Fn(f64) -> f64>(values: &[f64], weights: &[f64], cdf: F) -> f64 {
    let pairs = sorted_pairs(values, weights);
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    let mut d: f64 = 0.0;
    for &(v, w) in &pairs {
        let f = cdf(v);
        d = d.max((f - acc / total).abs());
        acc += w;
        d = d.max((f - acc / total).abs());
    }
    d
}

/// Monte Carlo standard error of the weighted mean of each coordinate,
/// `sqrt(Var / ESS)`.
pub fn mean_standard_error(ensemble: &WeightedEnsemble) -> Vec<f64> {
    ensemble
        .variance()
        .iter()
        .map(|v| (v / ensemble.ess()).sqrt())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictiveBand {
    pub index: usize,
    pub observed: f64,
    pub mean: f64,
    pub std: f64,
}

/// Weighted mean and standard deviation of `f(θ*, u)` over the ensemble,
/// with a fresh seed `u` per particle from its predictive stream.
pub fn posterior_predictive(
    sim: &dyn Simulator,
    ensemble: &WeightedEnsemble,
    master_seed: u64,
) -> Result<Vec<PredictiveBand>> {
    let d = sim.d_y();
    let mut sum_w = 0.0;
    let mut mean = vec![0.0; d];
    let mut sq = vec![0.0; d];
    for (i, (p, &w)) in ensemble.particles().iter().zip(ensemble.weights()).enumerate() {
        if w == 0.0 {
            continue;
        }
        let mut rng = ParticleSeedStream::new(master_seed, i as u64).rng(StreamLabel::Predictive);
        let u = SeedVector::sample(sim.d_u(), &mut rng);
        let Ok(x) = sim.forward(&p.theta_star, &u) else { continue };
        sum_w += w;
        for k in 0..d {
            mean[k] += w * x[k];
            sq[k] += w * x[k] * x[k];
        }
    }
    if sum_w == 0.0 {
        return Err(OmcError::EmptyPosterior {
            epsilon: ensemble.epsilon(),
        });
    }
    let observed = sim.observed();
    Ok((0..d)
        .map(|k| {
            let m = mean[k] / sum_w;
            PredictiveBand {
                index: k,
                observed: observed[k],
                mean: m,
                std: (sq[k] / sum_w - m * m).max(0.0).sqrt(),
            }
        })
        .collect())
}
