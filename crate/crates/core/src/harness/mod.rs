//! Experiment plumbing: configuration, baselines, comparators, replicated
//! runs with CSV output, and the oracle self-check suite.

pub mod baselines;
pub mod check;
pub mod comparator;
pub mod config;
pub mod experiment;
pub mod trace;

pub use check::{check_suite, CheckReport};
pub use config::{ExperimentConfig, Mode};
pub use experiment::{run_experiment, run_in_memory, run_oracle, RunOptions};
pub use trace::RegretTrace;
