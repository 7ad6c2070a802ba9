//! Config-driven pipeline behind the `naqas` binary: pretrain, search, evaluate, report.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod report;

pub use commands::{evaluate, pipeline, pretrain, search, EvalRecord, RunManifest, Seeds};
pub use config::RunConfig;
pub use report::report;
