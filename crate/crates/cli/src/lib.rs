//! Library backing the `fairkit` binary: argument types, run
//! configuration, manifest plumbing, and the command implementations.
//!
//! The binary wires three separable stages together: learning a fair
//! metric from data, training a model (plain or robust to fair
//! perturbations), and auditing the result. Metric files can travel
//! between the stages without exposing protected columns when stripped,
//! and every run leaves a manifest recording exactly what produced which
//! output.

pub mod args;
pub mod commands;
pub mod config;
pub mod manifest;

use fairkit::{Error, ErrorCategory, Result};

/// Dispatch a parsed invocation to its command implementation.
pub fn run(cli: &args::Cli) -> Result<()> {
    match &cli.command {
        args::Command::Metric(cmd) => commands::metric::run(cmd),
        args::Command::Train(cmd) => commands::train::run(cmd),
        args::Command::Audit(cmd) => commands::audit::run(cmd),
        args::Command::Simulate(cmd) => commands::simulate::run(cmd),
        args::Command::ReproduceAdult(cmd) => commands::reproduce::run(cmd),
    }
}

/// Process exit code for a failed run; usage errors exit 2 via the parser.
pub fn exit_code_for(error: &Error) -> i32 {
    match error.category() {
        ErrorCategory::Data => 3,
        ErrorCategory::Numeric => 4,
        ErrorCategory::Io => 5,
    }
}
