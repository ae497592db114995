//! `fairkit train`: fit a model and write it as a model file.

use std::path::Path;

use fairkit::data::FeatureSchema;
use fairkit::metric::FairMetric;
use fairkit::model::{balanced_accuracy, erm_train, LinearModel};
use fairkit::sensr::sensr_train;
use fairkit::{Error, Result};

use crate::args::{TrainCommand, TrainErmArgs, TrainSensrArgs};
use crate::commands::{load_encoded, lock_output, resolve_schema, LoadedData};
use crate::config::RunConfig;
use crate::manifest::{inject_manifest, RunManifest};

/// Dispatch a `train` subcommand.
pub fn run(cmd: &TrainCommand) -> Result<()> {
    match cmd {
        TrainCommand::Erm(args) => erm(args),
        TrainCommand::Sensr(args) => sensr(args),
    }
}

fn erm(args: &TrainErmArgs) -> Result<()> {
    let mut config = RunConfig::load(args.run.config.as_deref())?;
    config.apply_seed(args.run.seed);
    let schema = resolve_schema(&args.input.schema)?;
    let data = load_encoded(&args.input.data, &schema)?;
    let _lock = lock_output(&args.run.out)?;
    let model = erm_train(&data.encoded, &config.train)?;
    finish(&model, &schema, &config, &data, &args.run.out)
}

fn sensr(args: &TrainSensrArgs) -> Result<()> {
    let mut config = RunConfig::load(args.run.config.as_deref())?;
    config.apply_seed(args.run.seed);
    if let Some(l) = args.lambda {
        config.drf.train_lambda = l;
    }
    if let Some(e) = args.epsilon {
        config.drf.epsilon = e;
    }
    let schema = resolve_schema(&args.input.schema)?;
    let data = load_encoded(&args.input.data, &schema)?;
    let metric = FairMetric::from_file(&args.metric)?;
    if metric.d() != data.encoded.d() {
        return Err(Error::Config(format!(
            "metric covers {} features but the encoded data has {}",
            metric.d(),
            data.encoded.d()
        )));
    }
    let _lock = lock_output(&args.run.out)?;
    let result = sensr_train(&data.encoded, &metric, &config.sensr_train, &config.drf)?;
    println!(
        "robust training: final clean loss {:.6}, final robust loss {:.6}",
        result.clean_loss.last().copied().unwrap_or(f64::NAN),
        result.robust_loss.last().copied().unwrap_or(f64::NAN)
    );
    finish(&result.model, &schema, &config, &data, &args.run.out)
}

/// Write the model file, its manifest reference, and a training summary.
fn finish(
    model: &LinearModel,
    schema: &FeatureSchema,
    config: &RunConfig,
    data: &LoadedData,
    out: &Path,
) -> Result<()> {
    model.to_file(out, &schema.hash())?;
    let manifest = RunManifest::new(
        config.digest(),
        vec![data.raw.fingerprint()],
        vec![config.seed],
        vec![out.display().to_string()],
    );
    inject_manifest(out, &manifest.digest())?;
    manifest.write_sidecar(out)?;
    let b_acc = balanced_accuracy(model, &data.encoded)?;
    println!(
        "wrote model over {} features to {} (training balanced accuracy {:.4})",
        model.w.len(),
        out.display(),
        b_acc
    );
    Ok(())
}
