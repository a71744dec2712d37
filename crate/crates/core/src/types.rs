//! Value types shared across the crate.

use std::ops::Deref;

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{OmcError, Result};

/// Lower/upper clip applied to seed entries before inverse-CDF transforms.
pub const SEED_CLIP: f64 = 1e-12;

/// Externalized randomness `u`: with it fixed, a simulator is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedVector(Vec<f64>);

impl SeedVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(OmcError::SeedOutOfRange { index, value });
        }
        Ok(Self(values))
    }

    /// Draws `len` independent uniforms.
    pub fn sample<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        Self((0..len).map(|_| rng.random::<f64>()).collect())
    }

    /// Entry `i` clipped into `[SEED_CLIP, 1 - SEED_CLIP]`.
    pub fn clipped(&self, i: usize) -> f64 {
        self.0[i].clamp(SEED_CLIP, 1.0 - SEED_CLIP)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for SeedVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

macro_rules! real_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|v| v.is_finite())
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

real_vector!(
    /// Summary statistics: observed `y` or simulated `f(θ, u)`.
    Statistics
);
real_vector!(
    /// A point in parameter space.
    Parameters
);

/// One posterior particle.
///
/// A particle is produced either by optimizing `θ` for a fixed seed (OMC) or
/// by accepting a prior/proposal draw (rejection and SMC baselines). The
/// latter carry no Jacobian and have `theta_opt == theta_star`.
#[derive(Debug, Clone)]
pub struct Particle {
    pub seed: SeedVector,
    /// Optimizer endpoint `θ°`.
    pub theta_opt: Parameters,
    /// Ellipse centroid `θ*` after projection.
    pub theta_star: Parameters,
    pub f_at_opt: Statistics,
    pub discrepancy: f64,
    pub jacobian: Option<DMatrix<f64>>,
    /// Natural log of the unnormalized weight; `-inf` for rejected particles.
    pub log_weight: f64,
    pub sim_count: u64,
    pub accepted: bool,
    /// Set when `θ*` fell outside the prior support and `θ°` was used instead.
    pub projection_fallback: bool,
    /// Reason a converged particle was nonetheless rejected.
    pub diagnostic: Option<String>,
}

impl Particle {
    pub fn raw_weight(&self) -> f64 {
        self.log_weight.exp()
    }

    /// Marks the particle rejected, zeroing its weight.
    pub fn reject(&mut self, reason: impl Into<Option<String>>) {
        self.accepted = false;
        self.log_weight = f64::NEG_INFINITY;
        self.diagnostic = reason.into();
    }
}
