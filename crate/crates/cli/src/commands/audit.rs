//! `fairkit audit`: fairness reports for decisions, models, and metrics.

use std::collections::BTreeMap;
use std::path::Path;

use fairkit::audit::{
    counterfactual_consistency, demographic_parity, equal_odds, equal_opportunity,
    lipschitz_ratio_audit, prediction_rate_parity, subgroup_scan, GroupReport, GroupVector,
    LipschitzReport, SubgroupFinding,
};
use fairkit::data::FeatureSchema;
use fairkit::metric::FairMetric;
use fairkit::model::LinearModel;
use fairkit::sensr::{drf_audit, swap_audit, DRFReport, GroupSelector, SwapReport};
use fairkit::{Error, Result};
use serde::Serialize;

use crate::args::{
    AuditCommand, AuditConsistencyArgs, AuditDrfArgs, AuditGroupArgs, AuditLipschitzArgs,
    AuditSubgroupArgs, AuditSwapArgs,
};
use crate::commands::{load_encoded, lock_output, resolve_schema, LoadedData};
use crate::config::RunConfig;
use crate::manifest::{write_json_with_manifest, RunManifest};

/// Dispatch an `audit` subcommand.
pub fn run(cmd: &AuditCommand) -> Result<()> {
    match cmd {
        AuditCommand::Group(args) => group(args),
        AuditCommand::Subgroup(args) => subgroup(args),
        AuditCommand::Consistency(args) => consistency(args),
        AuditCommand::Drf(args) => drf(args),
        AuditCommand::Lipschitz(args) => lipschitz(args),
        AuditCommand::Swap(args) => swap(args),
    }
}

/// Decisions to audit: the model's, or the recorded outcomes without one.
fn decisions_for(
    model_path: Option<&Path>,
    schema: &FeatureSchema,
    data: &LoadedData,
) -> Result<(Vec<u8>, String)> {
    match model_path {
        Some(path) => {
            let model = LinearModel::from_file(path, &schema.hash())?;
            Ok((model.decide_all(&data.encoded)?, "model".to_string()))
        }
        None => Ok((data.raw.y.clone(), "outcomes".to_string())),
    }
}

/// All four group reports for one protected attribute.
#[derive(Debug, Serialize)]
struct GroupAuditEntry {
    demographic_parity: GroupReport,
    equal_odds: GroupReport,
    equal_opportunity: GroupReport,
    prediction_rate_parity: GroupReport,
}

/// `audit group` report body.
#[derive(Debug, Serialize)]
struct GroupAuditFile {
    decision_source: String,
    audits: BTreeMap<String, GroupAuditEntry>,
}

fn group(args: &AuditGroupArgs) -> Result<()> {
    let mut config = RunConfig::load(args.run.config.as_deref())?;
    config.apply_seed(args.run.seed);
    let schema = resolve_schema(&args.input.schema)?;
    let data = load_encoded(&args.input.data, &schema)?;
    let (decisions, decision_source) = decisions_for(args.model.as_deref(), &schema, &data)?;
    let protected = if args.protected.is_empty() {
        schema.protected_names()
    } else {
        args.protected.clone()
    };
    if protected.is_empty() {
        return Err(Error::Argument(
            "schema declares no protected columns; pass --protected".into(),
        ));
    }
    let mut audits = BTreeMap::new();
    for name in &protected {
        let groups = GroupVector::from_dataset(&data.raw, name)?;
        audits.insert(
            name.clone(),
            GroupAuditEntry {
                demographic_parity: demographic_parity(&decisions, &groups)?,
                equal_odds: equal_odds(&decisions, &data.raw.y, &groups)?,
                equal_opportunity: equal_opportunity(&decisions, &data.raw.y, &groups)?,
                prediction_rate_parity: prediction_rate_parity(&decisions, &data.raw.y, &groups)?,
            },
        );
    }
    let report = GroupAuditFile {
        decision_source,
        audits,
    };
    let _lock = lock_output(&args.run.out)?;
    let manifest = RunManifest::new(
        config.digest(),
        vec![data.raw.fingerprint()],
        vec![config.seed],
        vec![args.run.out.display().to_string()],
    );
    write_json_with_manifest(&args.run.out, &report, &manifest.digest())?;
    manifest.write_sidecar(&args.run.out)?;
    for (name, entry) in &report.audits {
        println!(
            "{name}: parity gap {:.4}, equal-odds gap {:.4} (rms) vs reference {}",
            entry.demographic_parity.gap_max,
            entry.equal_odds.gap_rms,
            entry.demographic_parity.reference
        );
    }
    Ok(())
}

/// `audit subgroup` report body.
#[derive(Debug, Serialize)]
struct SubgroupAuditFile {
    decision_source: String,
    protected: String,
    metric: String,
    depth: usize,
    min_support: usize,
    threshold: f64,
    findings: Vec<SubgroupFinding>,
}

fn subgroup(args: &AuditSubgroupArgs) -> Result<()> {
    let mut config = RunConfig::load(args.run.config.as_deref())?;
    config.apply_seed(args.run.seed);
    if let Some(d) = args.depth {
        config.subgroup.depth = d;
    }
    if let Some(m) = args.min_support {
        config.subgroup.min_support = m;
    }
    if let Some(t) = args.threshold {
        config.subgroup.threshold = t;
    }
    let schema = resolve_schema(&args.input.schema)?;
    let data = load_encoded(&args.input.data, &schema)?;
    let (decisions, decision_source) = decisions_for(args.model.as_deref(), &schema, &data)?;
    let protected = match &args.protected {
        Some(name) => name.clone(),
        None => {
            let names = schema.protected_names();
            match names.as_slice() {
                [only] => only.clone(),
                [] => {
                    return Err(Error::Argument(
                        "schema declares no protected columns; pass --protected".into(),
                    ))
                }
                many => {
                    return Err(Error::Argument(format!(
                        "schema declares several protected columns ({}); pass --protected",
                        many.join(", ")
                    )))
                }
            }
        }
    };
    let findings = subgroup_scan(
        &decisions,
        Some(&data.raw.y),
        &data.raw,
        &protected,
        config.subgroup.depth,
        config.subgroup.min_support,
        config.subgroup.threshold,
        &config.subgroup.metric,
    )?;
    let report = SubgroupAuditFile {
        decision_source,
        protected,
        metric: config.subgroup.metric.clone(),
        depth: config.subgroup.depth,
        min_support: config.subgroup.min_support,
        threshold: config.subgroup.threshold,
        findings,
    };
    let _lock = lock_output(&args.run.out)?;
    let manifest = RunManifest::new(
        config.digest(),
        vec![data.raw.fingerprint()],
        vec![config.seed],
        vec![args.run.out.display().to_string()],
    );
    write_json_with_manifest(&args.run.out, &report, &manifest.digest())?;
    manifest.write_sidecar(&args.run.out)?;
    println!("{} finding(s) above threshold", report.findings.len());
    for f in report.findings.iter().take(5) {
        let clauses: Vec<String> = f
            .predicate
            .iter()
            .map(|(c, v)| format!("{c} = {v}"))
            .collect();
        println!(
            "  [{}] {} gap {:.4} ({} {:.4} vs {} {:.4})",
            clauses.join(" and "),
            f.metric,
            f.gap,
            f.sides.0,
            f.values.0,
            f.sides.1,
            f.values.1
        );
    }
    Ok(())
}

/// `audit consistency` report body.
#[derive(Debug, Serialize)]
struct ConsistencyAuditFile {
    feature: String,
    values: Vec<String>,
    consistency: f64,
}

fn consistency(args: &AuditConsistencyArgs) -> Result<()> {
    let mut config = RunConfig::load(args.run.config.as_deref())?;
    config.apply_seed(args.run.seed);
    let schema = resolve_schema(&args.input.schema)?;
    let data = load_encoded(&args.input.data, &schema)?;
    let model = LinearModel::from_file(&args.model, &schema.hash())?;
    let value = counterfactual_consistency(&model, &data.encoded, &args.feature, &args.values)?;
    let report = ConsistencyAuditFile {
        feature: args.feature.clone(),
        values: args.values.clone(),
        consistency: value,
    };
    let _lock = lock_output(&args.run.out)?;
    let manifest = RunManifest::new(
        config.digest(),
        vec![data.raw.fingerprint()],
        vec![config.seed],
        vec![args.run.out.display().to_string()],
    );
    write_json_with_manifest(&args.run.out, &report, &manifest.digest())?;
    manifest.write_sidecar(&args.run.out)?;
    println!(
        "consistency {:.4} across {} values of {}",
        value,
        args.values.len(),
        args.feature
    );
    Ok(())
}

/// `audit drf` report body.
#[derive(Debug, Serialize)]
struct DrfAuditFile {
    report: DRFReport,
}

fn drf(args: &AuditDrfArgs) -> Result<()> {
    let mut config = RunConfig::load(args.run.config.as_deref())?;
    config.apply_seed(args.run.seed);
    if let Some(e) = args.epsilon {
        config.drf.epsilon = e;
    }
    let schema = resolve_schema(&args.input.schema)?;
    let data = load_encoded(&args.input.data, &schema)?;
    let model = LinearModel::from_file(&args.model, &schema.hash())?;
    let metric = load_metric(&args.metric, data.encoded.d())?;
    let report = drf_audit(&model, &metric, &data.encoded, &config.drf)?;
    let _lock = lock_output(&args.run.out)?;
    let manifest = RunManifest::new(
        config.digest(),
        vec![data.raw.fingerprint()],
        vec![config.seed],
        vec![args.run.out.display().to_string()],
    );
    let body = DrfAuditFile { report };
    write_json_with_manifest(&args.run.out, &body, &manifest.digest())?;
    manifest.write_sidecar(&args.run.out)?;
    println!(
        "delta-hat {:.6} at epsilon {} (lambda* {})",
        body.report.delta_hat, config.drf.epsilon, body.report.lambda_star
    );
    Ok(())
}

/// `audit lipschitz` report body.
#[derive(Debug, Serialize)]
struct LipschitzAuditFile {
    report: LipschitzReport,
}

fn lipschitz(args: &AuditLipschitzArgs) -> Result<()> {
    let mut config = RunConfig::load(args.run.config.as_deref())?;
    config.apply_seed(args.run.seed);
    let schema = resolve_schema(&args.input.schema)?;
    let data = load_encoded(&args.input.data, &schema)?;
    let model = LinearModel::from_file(&args.model, &schema.hash())?;
    let metric = load_metric(&args.metric, data.encoded.d())?;
    let report = lipschitz_ratio_audit(
        &model,
        &metric,
        &data.encoded,
        config.lipschitz.n_pairs,
        config.seed,
    )?;
    let _lock = lock_output(&args.run.out)?;
    let manifest = RunManifest::new(
        config.digest(),
        vec![data.raw.fingerprint()],
        vec![config.seed],
        vec![args.run.out.display().to_string()],
    );
    let body = LipschitzAuditFile { report };
    write_json_with_manifest(&args.run.out, &body, &manifest.digest())?;
    manifest.write_sidecar(&args.run.out)?;
    println!(
        "ratio quantiles over {} pairs: median {:.4}, p95 {:.4}, p99 {:.4}, max {:.4}",
        body.report.n_pairs_used,
        body.report.median,
        body.report.p95,
        body.report.p99,
        body.report.max
    );
    Ok(())
}

/// `audit swap` report body.
#[derive(Debug, Serialize)]
struct SwapAuditFile {
    report: SwapReport,
}

fn swap(args: &AuditSwapArgs) -> Result<()> {
    let mut config = RunConfig::load(args.run.config.as_deref())?;
    config.apply_seed(args.run.seed);
    if args.values.len() != 2 {
        return Err(Error::Argument(format!(
            "swap needs exactly two values (source,target), got {}",
            args.values.len()
        )));
    }
    let schema = resolve_schema(&args.input.schema)?;
    let data = load_encoded(&args.input.data, &schema)?;
    let model = LinearModel::from_file(&args.model, &schema.hash())?;
    let source = GroupSelector {
        column: args.protected.clone(),
        value: args.values[0].clone(),
    };
    let target = GroupSelector {
        column: args.protected.clone(),
        value: args.values[1].clone(),
    };
    let report = swap_audit(
        &model,
        &data.encoded,
        &args.feature,
        &source,
        &target,
        config.seed,
    )?;
    let _lock = lock_output(&args.run.out)?;
    let manifest = RunManifest::new(
        config.digest(),
        vec![data.raw.fingerprint()],
        vec![config.seed],
        vec![args.run.out.display().to_string()],
    );
    let body = SwapAuditFile { report };
    write_json_with_manifest(&args.run.out, &body, &manifest.digest())?;
    manifest.write_sidecar(&args.run.out)?;
    println!(
        "swap {} from {}={} to {}={}: loss delta {:+.6}, flip rate {:.4}",
        args.feature,
        source.column,
        source.value,
        target.column,
        target.value,
        body.report.loss_delta,
        body.report.flip_rate
    );
    Ok(())
}

/// Load a metric file and check it matches the encoded dimension.
fn load_metric(path: &Path, d: usize) -> Result<FairMetric> {
    let metric = FairMetric::from_file(path)?;
    if metric.d() != d {
        return Err(Error::Config(format!(
            "metric covers {} features but the encoded data has {d}",
            metric.d()
        )));
    }
    Ok(metric)
}
