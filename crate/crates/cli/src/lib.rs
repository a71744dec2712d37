//! Library side of the `omc` command: configuration, running the selected
//! sampler, and writing results.

mod compare;
mod output;
mod run;
mod settings;

pub use compare::{compare, ComparisonRow, ComparisonRun};
pub use output::{emit_outputs, metrics_json, write_particles};
pub use run::{execute, Outcome};
pub use settings::{Algorithm, CompareSettings, Overrides, Settings};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, names or configuration.
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] omc::OmcError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
