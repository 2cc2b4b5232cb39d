//! Experiment drivers for `mkdv-core`: flat key=value configs, seeded sweeps
//! and deterministic CSV/JSON result files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{run, Command, RunOutcome, Status};
pub use config::ExperimentConfig;
pub use error::{LabError, Result};
