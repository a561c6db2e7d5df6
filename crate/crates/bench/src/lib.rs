//! Experiment runner for `sympstiefel`: config files, scheme sweeps,
//! result tables, convergence histories and the acceptance checks.

pub mod acceptance;
pub mod config;
pub mod gen;
pub mod runner;

pub use config::{ExperimentConfig, Method, MetricKind, Scheme};
pub use runner::{run_suite, SchemeRow, SuiteResult};
