//! File formats and command-line front end for the `addcat-core` pipeline.

pub mod cli;
pub mod config;
pub mod ingest;
pub mod output;

pub use cli::{cmd_detect, cmd_evaluate, cmd_pipeline, cmd_synth, run, CliError};
pub use config::RunConfig;
