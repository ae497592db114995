//! `fairkit metric`: learn a fair metric and write it as a metric file.

use fairkit::metric::{
    explore_fit, fit_sensitive_directions, make_pairs, projection_complement, FairMetric, PairSet,
};
use fairkit::Result;

use crate::args::{MetricArgs, MetricCommand};
use crate::commands::{load_encoded, lock_output, resolve_schema};
use crate::config::RunConfig;
use crate::manifest::{inject_manifest, RunManifest};

/// Dispatch a `metric` subcommand.
pub fn run(cmd: &MetricCommand) -> Result<()> {
    match cmd {
        MetricCommand::Subspace(args) => execute(args, fit_subspace),
        MetricCommand::Explore(args) => execute(args, fit_explore),
    }
}

/// Shared frame: load inputs, fit, optionally strip, write, record.
fn execute(
    args: &MetricArgs,
    fit: fn(&MetricArgs, &RunConfig, &crate::commands::LoadedData) -> Result<FairMetric>,
) -> Result<()> {
    let mut config = RunConfig::load(args.run.config.as_deref())?;
    config.apply_seed(args.run.seed);
    let schema = resolve_schema(&args.input.schema)?;
    let data = load_encoded(&args.input.data, &schema)?;
    let _lock = lock_output(&args.run.out)?;
    let mut metric = fit(args, &config, &data)?;
    if args.strip_provenance {
        metric.provenance = strip_tags(&metric.provenance);
    }
    metric.to_file(&args.run.out)?;
    let manifest = RunManifest::new(
        config.digest(),
        vec![data.raw.fingerprint()],
        vec![config.seed],
        vec![args.run.out.display().to_string()],
    );
    inject_manifest(&args.run.out, &manifest.digest())?;
    manifest.write_sidecar(&args.run.out)?;
    println!(
        "wrote {:?} metric over {} features to {}",
        metric.kind,
        metric.d(),
        args.run.out.display()
    );
    Ok(())
}

/// Projection complement of the fitted sensitive directions.
fn fit_subspace(
    args: &MetricArgs,
    config: &RunConfig,
    data: &crate::commands::LoadedData,
) -> Result<FairMetric> {
    let dirs = fit_sensitive_directions(
        &data.encoded,
        &args.protected,
        config.subspace.include_indicators,
    )?;
    projection_complement(&dirs, data.encoded.d())
}

/// Pair-logistic metric learned over all protected columns at once.
fn fit_explore(
    args: &MetricArgs,
    config: &RunConfig,
    data: &crate::commands::LoadedData,
) -> Result<FairMetric> {
    let mut pairs = Vec::new();
    for (i, name) in args.protected.iter().enumerate() {
        let set = make_pairs(
            &data.encoded,
            name,
            config.explore.max_pairs_per_class,
            config.seed.wrapping_add(i as u64),
        )?;
        pairs.extend(set.pairs);
    }
    let merged = PairSet {
        pairs,
        protected: args.protected.join(","),
    };
    let result = explore_fit(&data.encoded, &merged, &config.explore.to_explore_config())?;
    println!(
        "explore fit: {} pairs, final loss {:.6}, offset {:.6}",
        merged.pairs.len(),
        result.loss_trace.last().copied().unwrap_or(f64::NAN),
        result.offset
    );
    Ok(result.metric)
}

/// Keep only the mechanism part of each tag, before any ':'.
fn strip_tags(tags: &[String]) -> Vec<String> {
    let mut out: Vec<String> = tags
        .iter()
        .map(|t| t.split(':').next().unwrap_or_default().to_string())
        .collect();
    out.dedup();
    out
}
