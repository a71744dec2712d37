//! Comparison samplers (rejection ABC, population Monte Carlo ABC) and the
//! ε-round variant of OMC.

mod rejection;
mod sequential;
mod smc;

use serde::{Deserialize, Serialize};

use crate::ensemble::WeightedEnsemble;
use crate::error::{OmcError, Result};

pub use rejection::rejection_abc;
pub use sequential::sequential_omc;
pub use smc::smc_abc;

/// Strictly decreasing positive tolerances, one per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EpsilonSchedule(Vec<f64>);

impl EpsilonSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(OmcError::InvalidArgument("empty epsilon schedule".into()));
        }
        if values.iter().any(|e| e.is_nan() || *e <= 0.0) {
            return Err(OmcError::InvalidArgument(format!(
                "epsilon values must be positive: {values:?}"
            )));
        }
        if values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(OmcError::InvalidArgument(format!(
                "epsilon schedule must be strictly decreasing: {values:?}"
            )));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn last(&self) -> f64 {
        *self.0.last().expect("schedule is nonempty")
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<Vec<f64>> for EpsilonSchedule {
    type Error = OmcError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EpsilonSchedule> for Vec<f64> {
    fn from(s: EpsilonSchedule) -> Self {
        s.0
    }
}

/// Per-round summary, as written to `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub epsilon: f64,
    pub n: usize,
    pub ess: f64,
    pub ess_over_n: f64,
    /// Cumulative simulator calls per sample up to and including this round.
    pub ss_mean: f64,
    pub acceptance_fraction: f64,
    pub round_sims: u64,
    pub total_sims: u64,
}

impl RoundReport {
    pub fn new(round: usize, ensemble: &WeightedEnsemble, round_sims: u64, total_sims: u64, ss_mean: f64) -> Self {
        Self {
            round,
            epsilon: ensemble.epsilon(),
            n: ensemble.len(),
            ess: ensemble.ess(),
            ess_over_n: ensemble.ess_over_n(),
            ss_mean,
            acceptance_fraction: ensemble.acceptance_fraction(),
            round_sims,
            total_sims,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Round {
    pub report: RoundReport,
    pub ensemble: WeightedEnsemble,
}

/// All rounds of one sampler run, in schedule order.
#[derive(Debug, Clone)]
pub struct SamplerRun {
    pub rounds: Vec<Round>,
}

impl SamplerRun {
    pub fn last(&self) -> &Round {
        self.rounds.last().expect("a run has at least one round")
    }

    pub fn ensemble(&self) -> &WeightedEnsemble {
        &self.last().ensemble
    }

    pub fn reports(&self) -> Vec<RoundReport> {
        self.rounds.iter().map(|r| r.report.clone()).collect()
    }
}
