//! Driver library behind the `afmtj-lab` binary: subcommand configs, the
//! subcommands themselves, the acceptance checks and the run manifest.

pub mod checks;
pub mod commands;
pub mod files;
pub mod manifest;

pub use commands::{exit_code, produce, Failure, Output, Subcommand};
