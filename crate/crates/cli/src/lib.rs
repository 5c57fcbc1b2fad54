//! Command-line front end: datasets, synthetic generators, sweep experiments
//! and model comparison on top of `csl-core`.

pub mod commands;
pub mod compare;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod synth;

pub use error::{exit_code, CliError};
