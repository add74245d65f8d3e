//! Command-line front end for the metric optimization library: the
//! `entropy`, `dimension`, `bound` and `check` commands and their outputs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{cmd_bound, cmd_check, cmd_dimension, cmd_entropy, BoundSummary, CheckSummary, EntropySummary};
pub use config::{Overrides, RuleName, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] metricopt::Error),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("failed properties: {}", .0.join(", "))]
    CheckFailed(Vec<String>),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// 2 for invalid input, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
            CliError::Io(_) | CliError::CheckFailed(_) => 1,
        }
    }
}
