//! Batch front-end for the `bhvar` toolkit: configuration documents,
//! trajectory runs, the identity verification suite and the cat, weight and
//! duality reports.

pub mod config;
pub mod evolve;
pub mod output;
pub mod tasks;
pub mod verify;

use std::path::PathBuf;

pub use config::{parse_config, RunConfig, Scheme};
pub use evolve::{run_evolution, EvolutionResult};
pub use verify::{run_identity_suite, Scope, SuiteReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(#[from] toml::de::Error),

    #[error("missing key `{key}` (required by {context})")]
    Missing { key: String, context: String },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Core(#[from] bhvar_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub(crate) fn missing(key: &str, context: &str) -> Self {
        CliError::Missing {
            key: key.to_string(),
            context: context.to_string(),
        }
    }
}
