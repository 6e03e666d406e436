//! Configuration, orchestration and persistence for the cut-point
//! experiments of `cutlab-core`.
//!
//! A run turns an [`ExperimentConfig`] into an [`Aggregate`] of raw counts,
//! renders it into CSV files plus `summary.json`, and records a
//! [`RunReport`] with SHA-256 hashes of every data file. Runs over adjacent
//! trial ranges can be [`merge`]d into exactly the run over their union.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod report;

pub use config::{Experiment, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use experiment::{compute, Aggregate};
pub use output::{render, Files, SCHEMA_VERSION};
pub use report::{execute, merge, read_report, run, write_outputs, RunReport};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "CUTLAB_OUT";
