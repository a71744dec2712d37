use thiserror::Error;

/// Errors produced anywhere in the inference pipeline.
#[derive(Debug, Error)]
pub enum OmcError {
    #[error("dimension mismatch in {what}: expected length {expected}, got {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("seed entry {index} = {value} lies outside [0, 1]")]
    SeedOutOfRange { index: usize, value: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("uniform value {u} has an infinite quantile")]
    InfiniteQuantile { u: f64 },

    #[error("parameter {theta:?} lies outside the support of {simulator}")]
    OutsideSupport { simulator: &'static str, theta: Vec<f64> },

    #[error("divergent simulation in {simulator}: non-finite state at step {step}")]
    Divergent { simulator: &'static str, step: usize },

    #[error("weights are not normalized: sum = {sum}")]
    Unnormalized { sum: f64 },

    #[error("empty posterior at epsilon = {epsilon}: no particle was accepted; try a larger epsilon")]
    EmptyPosterior { epsilon: f64 },

    #[error("non-finite value for particle {index}")]
    NonFinite { index: usize },

    #[error("non-finite finite-difference output in Jacobian column {column}")]
    JacobianColumn { column: usize },

    #[error("numerically rank-deficient Jacobian: {0}")]
    SingularJacobian(String),

    #[error("underdetermined: {d_theta} parameters but only {d_y} statistics, the procedure does not apply")]
    Underdetermined { d_theta: usize, d_y: usize },

    #[error("population collapse in round {round}: ESS = {ess:.3}")]
    PopulationCollapse { round: usize, ess: f64 },

    #[error("no draw accepted within {sims} simulations (best discrepancy {best})")]
    NoAcceptance { sims: u64, best: f64 },

    #[error("unknown simulator '{0}'")]
    UnknownSimulator(String),
}

pub type Result<T, E = OmcError> = std::result::Result<T, E>;
