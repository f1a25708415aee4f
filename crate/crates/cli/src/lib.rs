//! Configuration, run orchestration, persistence, and the verification
//! commands for the spherical phase-separation solver.

pub mod checkpoint;
pub mod checks;
pub mod config;
pub mod runner;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Core(#[from] mcps_core::CoreError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
