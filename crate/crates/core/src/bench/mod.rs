//! Experiment harness: configuration, seeded batch runs, reference values and CSV output.

pub mod aggregate;
pub mod config;
pub mod noise_check;
pub mod oracle;
pub mod plotdata;
pub mod runner;

pub use config::{ExperimentConfig, Method, NoiseSource, OptimizerKind, Reference, Task};
pub use runner::{run_experiment, Experiment, RunOutcome};
