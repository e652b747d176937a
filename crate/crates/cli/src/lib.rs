//! Config-driven runner for the lattice experiments: strict TOML configs,
//! hashed artifacts, an atomic manifest per run and hash-based replay.

pub mod artifacts;
pub mod config;
pub mod experiments;
pub mod manifest;
pub mod runner;

pub use config::{load_config, parse_config, ConfigError, ExperimentConfig};
pub use manifest::{Check, RunManifest, RunStatus};
pub use runner::{replay, run, run_in, ReplayReport, RunOutcome};
