//! Experiment runner: reads a JSON configuration, simulates each grid
//! point, compares the empirical distance with the matching bound and
//! writes machine-readable reports.

pub mod config;
mod report;
mod run;
mod synthetic;

use std::path::Path;

use thiserror::Error;

pub use config::{config_hash, parse_config, ConfigError, ExperimentConfig, ModelKind, SCHEMA_VERSION};
pub use report::{key_name, render, write_csv, write_plot, ExperimentReport, CODE_VERSION, CSV_FIELDS};
pub use run::{
    grid_seed, run, synthetic_design, Check, DecayRecord, Estimate, ExperimentRun, GridRecord,
    MultivariateRecord, DOMINANCE_SE,
};
pub use synthetic::CommonShock;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed in {at}: {message}")]
    Simulation { at: String, message: String },
    #[error("output: {0}")]
    Output(String),
}

impl HarnessError {
    /// 2 for configuration problems, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 3,
        }
    }
}

/// Reads and validates a configuration file, returning it with the hash
/// of its text.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, String), HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        line: None,
        column: None,
        field: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let cfg = parse_config(&text)?;
    Ok((cfg, config_hash(&text)))
}
