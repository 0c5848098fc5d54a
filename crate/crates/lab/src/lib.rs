//! Batch runner for parallel-in-time experiments: experiment files, a
//! thread-pool executor, and report/CSV output for `pint-core` runs.

pub mod cli;
pub mod config;
pub mod output;
pub mod runner;
pub mod systems;

pub use config::{ConfigError, Experiment};
pub use runner::{execute_all, expand, Mode, Rayon, RunOutcome, RunPlan, WallClock};
