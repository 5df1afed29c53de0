//! Experiment runner behind the `pcsft` binary.
//!
//! Every command is a pure function of its resolved configuration: the same
//! config and seed always produce byte-identical payloads, whatever the
//! worker count.

// `!(x > 0.0)` style checks are deliberate: NaN has to fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

pub use commands::{run, Outcome};
pub use config::{CommandKind, ExperimentConfig, Format};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or input data; exit status 2.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// A computation failed after validation; exit status 1.
    #[error("computation failed: {0}")]
    Failed(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Invalid(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<pcsft::PcsftError> for CliError {
    fn from(e: pcsft::PcsftError) -> Self {
        CliError::Failed(e.to_string())
    }
}
