//! Batch front end for the Boussinesq solver: plain-text configuration,
//! named scenarios reproducing the analysis claims, CSV diagnostics, and
//! bit-exact checkpointing.

pub mod checkpoint;
pub mod config;
pub mod report;
pub mod scenario;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use config::{ConfigError, IcKind, RunConfig, Scenario};
pub use scenario::{run_scenario, ScenarioOutcome};
