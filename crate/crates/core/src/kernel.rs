//! Uniform ε-ball discrepancy kernel.

use serde::{Deserialize, Serialize};

use crate::error::{OmcError, Result};

/// Acceptance kernel: a draw is accepted iff `ρ(y, x) ≤ epsilon`, where `ρ`
/// is the Euclidean norm of the residual divided elementwise by `scale`.
///
/// The kernel's normalizing constant never matters: it cancels when the
/// posterior weights are normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyKernel {
    epsilon: f64,
    scale: Option<Vec<f64>>,
}

impl DiscrepancyKernel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(OmcError::InvalidArgument(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(Self { epsilon, scale: None })
    }

    pub fn with_scale(epsilon: f64, scale: Vec<f64>) -> Result<Self> {
        let mut kernel = Self::new(epsilon)?;
        if let Some(bad) = scale.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(OmcError::InvalidArgument(format!(
                "scale entries must be positive and finite, got {bad}"
            )));
        }
        kernel.scale = Some(scale);
        Ok(kernel)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn scale(&self) -> Option<&[f64]> {
        self.scale.as_deref()
    }

    /// Same scale, different threshold.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut k = Self::new(epsilon)?;
        k.scale = self.scale.clone();
        Ok(k)
    }

    pub fn accepts(&self, rho: f64) -> bool {
        rho <= self.epsilon
    }
}

/// `ρ = ‖(y − x) ⊘ scale‖₂`.
pub fn discrepancy(y: &[f64], x: &[f64], kernel: &DiscrepancyKernel) -> Result<f64> {
    if y.len() != x.len() {
        return Err(OmcError::DimensionMismatch {
            what: "discrepancy (observed vs simulated)",
            expected: y.len(),
            found: x.len(),
        });
    }
    let sum_sq = match kernel.scale() {
        Some(scale) => {
            if scale.len() != y.len() {
                return Err(OmcError::DimensionMismatch {
                    what: "discrepancy scale",
                    expected: y.len(),
                    found: scale.len(),
                });
            }
            y.iter()
                .zip(x)
                .zip(scale)
                .map(|((a, b), s)| ((a - b) / s).powi(2))
                .sum::<f64>()
        }
        None => y.iter().zip(x).map(|(a, b)| (a - b).powi(2)).sum(),
    };
    Ok(sum_sq.sqrt())
}
