//! `fairkit reproduce-adult`: train a baseline, a robust model under a
//! subspace metric, and a robust model under a learned metric on census
//! income data, then report held-out accuracy and fairness side by side.
//!
//! The numeric protocol below is the experiment definition, calibrated so
//! the three variants separate cleanly on a linear model class; it is
//! serialized verbatim into the run's config digest. Training treats the
//! relationship column as an ordinary feature; only the consistency audit
//! singles it out.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use fairkit::audit::{counterfactual_consistency, equal_odds, GroupVector};
use fairkit::data::{adult_schema, Dataset, FeatureSchema};
use fairkit::digest::sha256_hex;
use fairkit::metric::{
    explore_fit, fit_sensitive_directions, make_pairs, projection_complement, ExploreConfig,
    PairSet,
};
use fairkit::model::{balanced_accuracy_of, erm_train, LinearModel, TrainConfig};
use fairkit::sensr::{sensr_train, DRFConfig};
use fairkit::{Error, Result};
use serde::Serialize;

use crate::args::ReproduceArgs;
use crate::manifest::{write_json_with_manifest, DirLock, RunManifest};

/// Comparable/incomparable pairs sampled per class for the sex column.
const SEX_PAIRS_PER_CLASS: usize = 1200;
/// Comparable/incomparable pairs sampled per class for the race column.
const RACE_PAIRS_PER_CLASS: usize = 2400;
/// Iteration budget for the pair-logistic metric fit.
const EXPLORE_MAX_ITER: usize = 1200;

/// Baseline trainer: long full-batch descent to convergence.
fn baseline_config(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 2000,
        seed,
        ..TrainConfig::default()
    }
}

/// Mini-batch trainer shared by both robust variants.
fn robust_config(seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 0.08,
        epochs: 18,
        batch_size: 256,
        l2: 1e-4,
        seed,
        class_balance: true,
    }
}

/// Inner-ascent budget against the projection-complement metric.
fn subspace_drf(seed: u64) -> DRFConfig {
    DRFConfig {
        train_lambda: 6.0,
        inner_steps: 10,
        inner_lr: 0.1,
        seed,
        ..DRFConfig::default()
    }
}

/// Inner-ascent budget against the learned metric.
fn explore_drf(seed: u64) -> DRFConfig {
    DRFConfig {
        train_lambda: 2.5,
        inner_steps: 12,
        inner_lr: 0.18,
        seed,
        ..DRFConfig::default()
    }
}

fn explore_config() -> ExploreConfig {
    ExploreConfig {
        max_iter: EXPLORE_MAX_ITER,
        ..ExploreConfig::default()
    }
}

/// The fixed protocol, serialized as the config-digest source.
#[derive(Serialize)]
struct Protocol {
    baseline: TrainConfig,
    robust: TrainConfig,
    subspace_drf: DRFConfig,
    explore_drf: DRFConfig,
    sex_pairs_per_class: usize,
    race_pairs_per_class: usize,
    explore_max_iter: usize,
}

/// Digest of the protocol with a canonical zero seed; the manifest lists
/// the actual seeds separately.
fn protocol_digest() -> String {
    let protocol = Protocol {
        baseline: baseline_config(0),
        robust: robust_config(0),
        subspace_drf: subspace_drf(0),
        explore_drf: explore_drf(0),
        sex_pairs_per_class: SEX_PAIRS_PER_CLASS,
        race_pairs_per_class: RACE_PAIRS_PER_CLASS,
        explore_max_iter: EXPLORE_MAX_ITER,
    };
    let text = serde_json::to_string(&protocol).expect("protocol serializes");
    sha256_hex(text.as_bytes())
}

/// Held-out metrics for one trained variant.
#[derive(Debug, Clone, Serialize)]
pub struct VariantMetrics {
    pub b_acc: f64,
    pub s_con: f64,
    pub gap_rms_sex: f64,
    pub gap_max_sex: f64,
    pub gap_rms_race: f64,
    pub gap_max_race: f64,
}

/// One seed's results for all three variants.
#[derive(Debug, Serialize)]
struct SeedRow {
    seed: u64,
    baseline: VariantMetrics,
    sensr: VariantMetrics,
    sensr_explore: VariantMetrics,
}

/// Whole-report body: raw per-seed rows plus mean and sd summaries.
#[derive(Debug, Serialize)]
struct ReproduceReport {
    per_seed: Vec<SeedRow>,
    mean: BTreeMap<String, VariantMetrics>,
    sd: BTreeMap<String, VariantMetrics>,
}

/// Run the three-way experiment.
pub fn run(args: &ReproduceArgs) -> Result<()> {
    if args.seeds.is_empty() {
        return Err(Error::Argument("--seeds needs at least one seed".into()));
    }
    let train_path = args.data_dir.join("adult_train.csv");
    let test_path = args.data_dir.join("adult_test.csv");
    for path in [&train_path, &test_path] {
        if !path.is_file() {
            return Err(Error::Io(format!(
                "missing {}: place census-format train/test CSVs named adult_train.csv and \
                 adult_test.csv in {}. The census income extract is available from the UCI \
                 Machine Learning Repository (https://archive.ics.uci.edu/dataset/2/adult) \
                 under its own license; convert it to the column layout in the README, or \
                 write a synthetic stand-in with the library's data::synth_adult and \
                 Dataset::write_csv.",
                path.display(),
                args.data_dir.display()
            )));
        }
    }
    let schema = load_schema(&args.data_dir)?;
    let train_raw = Dataset::load_csv(&train_path, &schema)?;
    let test_raw = Dataset::load_csv(&test_path, &schema)?;
    let train = train_raw.encode_and_standardize(None)?;
    let test = test_raw.encode_and_standardize(Some(&train_raw))?;
    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| Error::Io(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let _lock = DirLock::acquire(&args.out_dir)?;

    // The sensitive subspace is seed-independent; fit it once.
    let directions = fit_sensitive_directions(
        &train,
        &["race".to_string(), "sex".to_string()],
        true,
    )?;
    let metric_sub = projection_complement(&directions, train.d())?;

    let mut per_seed = Vec::new();
    for &seed in &args.seeds {
        let t_seed = Instant::now();
        let baseline = erm_train(&train, &baseline_config(seed))?;
        let sub = sensr_train(&train, &metric_sub, &robust_config(seed), &subspace_drf(seed))?;
        let mut pairs = make_pairs(&train, "sex", SEX_PAIRS_PER_CLASS, seed)?.pairs;
        pairs.extend(make_pairs(&train, "race", RACE_PAIRS_PER_CLASS, seed.wrapping_add(1))?.pairs);
        let merged = PairSet {
            pairs,
            protected: "race,sex".to_string(),
        };
        let learned = explore_fit(&train, &merged, &explore_config())?;
        let exp = sensr_train(&train, &learned.metric, &robust_config(seed), &explore_drf(seed))?;
        per_seed.push(SeedRow {
            seed,
            baseline: evaluate(&baseline, &test)?,
            sensr: evaluate(&sub.model, &test)?,
            sensr_explore: evaluate(&exp.model, &test)?,
        });
        eprintln!("seed {seed} finished in {:.1}s", t_seed.elapsed().as_secs_f64());
    }

    let mut mean = BTreeMap::new();
    let mut sd = BTreeMap::new();
    for (name, pick) in VARIANTS {
        let rows: Vec<&VariantMetrics> = per_seed.iter().map(|r| pick(r)).collect();
        let (m, s) = summarize(&rows);
        mean.insert(name.to_string(), m);
        sd.insert(name.to_string(), s);
    }
    let table = table_text(&mean, &sd);
    let report = ReproduceReport { per_seed, mean, sd };

    let report_path = args.out_dir.join("report.json");
    let table_path = args.out_dir.join("report.txt");
    let manifest = RunManifest::new(
        protocol_digest(),
        vec![train_raw.fingerprint(), test_raw.fingerprint()],
        args.seeds.clone(),
        vec![
            report_path.display().to_string(),
            table_path.display().to_string(),
        ],
    );
    write_json_with_manifest(&report_path, &report, &manifest.digest())?;
    std::fs::write(&table_path, &table)
        .map_err(|e| Error::Io(format!("cannot write {}: {e}", table_path.display())))?;
    manifest.write_sidecar(&report_path)?;
    print!("{table}");
    Ok(())
}

/// Variant labels with their row accessors, in report order.
const VARIANTS: [(&str, fn(&SeedRow) -> &VariantMetrics); 3] = [
    ("baseline", |r| &r.baseline),
    ("sensr", |r| &r.sensr),
    ("sensr_explore", |r| &r.sensr_explore),
];

/// Use the schema file shipped with the data when present.
fn load_schema(data_dir: &Path) -> Result<FeatureSchema> {
    let path = data_dir.join("adult.schema.json");
    if path.is_file() {
        FeatureSchema::from_json_file(&path)
    } else {
        Ok(adult_schema())
    }
}

/// Held-out metrics for one model.
fn evaluate(model: &LinearModel, test: &Dataset) -> Result<VariantMetrics> {
    let decisions = model.decide_all(test)?;
    let b_acc = balanced_accuracy_of(&decisions, &test.y)?;
    let s_con = counterfactual_consistency(
        model,
        test,
        "relationship",
        &["Husband".to_string(), "Wife".to_string()],
    )?;
    let sex = equal_odds(&decisions, &test.y, &GroupVector::from_dataset(test, "sex")?)?;
    let race = equal_odds(&decisions, &test.y, &GroupVector::from_dataset(test, "race")?)?;
    Ok(VariantMetrics {
        b_acc,
        s_con,
        gap_rms_sex: sex.gap_rms,
        gap_max_sex: sex.gap_max,
        gap_rms_race: race.gap_rms,
        gap_max_race: race.gap_max,
    })
}

/// Mean and sample standard deviation; sd is zero for fewer than two values.
fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Field-wise mean and sd over seed rows.
fn summarize(rows: &[&VariantMetrics]) -> (VariantMetrics, VariantMetrics) {
    let stat = |f: fn(&VariantMetrics) -> f64| {
        let values: Vec<f64> = rows.iter().map(|r| f(r)).collect();
        mean_sd(&values)
    };
    let b_acc = stat(|r| r.b_acc);
    let s_con = stat(|r| r.s_con);
    let grs = stat(|r| r.gap_rms_sex);
    let gms = stat(|r| r.gap_max_sex);
    let grr = stat(|r| r.gap_rms_race);
    let gmr = stat(|r| r.gap_max_race);
    (
        VariantMetrics {
            b_acc: b_acc.0,
            s_con: s_con.0,
            gap_rms_sex: grs.0,
            gap_max_sex: gms.0,
            gap_rms_race: grr.0,
            gap_max_race: gmr.0,
        },
        VariantMetrics {
            b_acc: b_acc.1,
            s_con: s_con.1,
            gap_rms_sex: grs.1,
            gap_max_sex: gms.1,
            gap_rms_race: grr.1,
            gap_max_race: gmr.1,
        },
    )
}

/// Fixed-width comparison table shared by report.txt and standard output.
fn table_text(
    mean: &BTreeMap<String, VariantMetrics>,
    sd: &BTreeMap<String, VariantMetrics>,
) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:>18} {:>18} {:>18} {:>18} {:>18} {:>18}\n",
        "variant", "B-Acc", "S-Con", "Gap-RMS sex", "Gap-max sex", "Gap-RMS race", "Gap-max race"
    ));
    for (name, _) in VARIANTS {
        let m = &mean[name];
        let s = &sd[name];
        let cell = |v: f64, e: f64| format!("{v:.4} +/- {e:.4}");
        out.push_str(&format!(
            "{:<14} {:>18} {:>18} {:>18} {:>18} {:>18} {:>18}\n",
            name,
            cell(m.b_acc, s.b_acc),
            cell(m.s_con, s.s_con),
            cell(m.gap_rms_sex, s.gap_rms_sex),
            cell(m.gap_max_sex, s.gap_max_sex),
            cell(m.gap_rms_race, s.gap_rms_race),
            cell(m.gap_max_race, s.gap_max_race)
        ));
    }
    out
}
