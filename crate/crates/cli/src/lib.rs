//! File formats, configuration and commands of the `gcnboost` binary.
//!
//! Every command is a plain function over its arguments so it can be driven
//! from tests as well as from `main`.

pub mod binary;
pub mod commands;
pub mod config;
pub mod dataset_dir;
pub mod error;
pub mod fsutil;
pub mod parallel;
pub mod report;

pub use commands::{cmd_ablate, cmd_generate, cmd_report, cmd_train, GenerateArgs, RunArgs};
pub use error::{CliError, Result};
