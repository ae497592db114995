//! `fairkit simulate`: generate synthetic benchmark datasets.

use fairkit::data::synth_table1;
use fairkit::{Error, Result};

use crate::args::{SimulateCommand, SimulateTable1Args};
use crate::commands::lock_output;
use crate::config::RunConfig;
use crate::manifest::RunManifest;

/// Dispatch a `simulate` subcommand.
pub fn run(cmd: &SimulateCommand) -> Result<()> {
    match cmd {
        SimulateCommand::Table1(args) => table1(args),
    }
}

fn table1(args: &SimulateTable1Args) -> Result<()> {
    let mut config = RunConfig::load(args.run.config.as_deref())?;
    config.apply_seed(args.run.seed);
    if let Some(rates) = &args.rates {
        config.simulate.rates = parse_rates(rates)?;
    }
    let data = synth_table1(config.simulate.n_per_cell, config.seed, config.simulate.rates)?;
    let _lock = lock_output(&args.run.out)?;
    data.write_csv(&args.run.out)?;
    let manifest = RunManifest::new(
        config.digest(),
        vec![data.fingerprint()],
        vec![config.seed],
        vec![args.run.out.display().to_string()],
    );
    manifest.write_sidecar(&args.run.out)?;
    println!(
        "wrote {} rows ({} per cell, rates {:?}) to {}",
        data.n(),
        config.simulate.n_per_cell,
        config.simulate.rates,
        args.run.out.display()
    );
    Ok(())
}

/// Check that `--rates` supplied exactly four probabilities.
fn parse_rates(values: &[f64]) -> Result<[f64; 4]> {
    match values {
        [a, b, c, d] => Ok([*a, *b, *c, *d]),
        other => Err(Error::Argument(format!(
            "--rates needs exactly four comma-separated values, got {}",
            other.len()
        ))),
    }
}
