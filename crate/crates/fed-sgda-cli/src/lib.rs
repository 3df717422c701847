//! Experiment harness for the federated minimax simulator: config file
//! parsing, single runs, grid sweeps, multi-seed aggregation, CSV output,
//! and named hyperparameter presets.  The `fed-sgda` binary is a thin
//! wrapper around this library so integration tests can drive everything
//! in-process.

pub mod config;
pub mod experiment;
pub mod presets;

pub use config::{ExperimentConfig, SweepGrid};
pub use experiment::{run_experiment, sweep, RunSummary, SeedOutcome};
