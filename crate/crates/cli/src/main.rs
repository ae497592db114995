//! Binary entry point: parse arguments, dispatch, map errors to exit codes.
//!
//! Exit codes: 0 success, 2 usage (from the argument parser), 3 data or
//! validation problems, 4 numeric failures, 5 I/O failures.

use clap::Parser;
use fairkit_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = fairkit_cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(fairkit_cli::exit_code_for(&e));
    }
}
