//! Command-line surface: one binary, one subcommand per pipeline stage.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Top-level argument parser for the `fairkit` binary.
#[derive(Debug, Parser)]
#[command(
    name = "fairkit",
    version,
    about = "Fairness toolkit for tabular decision models: learn fair metrics, train robust models, and audit the results"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Pipeline stages exposed by the binary.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a fair metric and write it as a metric JSON file.
    #[command(subcommand)]
    Metric(MetricCommand),
    /// Train a decision model and write it as a model JSON file.
    #[command(subcommand)]
    Train(TrainCommand),
    /// Audit decisions or a model and write a report JSON file.
    #[command(subcommand)]
    Audit(AuditCommand),
    /// Generate a synthetic benchmark dataset as CSV.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Run the three-way census income experiment end to end.
    ReproduceAdult(ReproduceArgs),
}

/// Ways to learn a fair metric.
#[derive(Debug, Subcommand)]
pub enum MetricCommand {
    /// Projection complement of fitted sensitive directions.
    Subspace(MetricArgs),
    /// Quadratic metric learned from comparable and incomparable pairs.
    Explore(MetricArgs),
}

/// Shared arguments of the metric subcommands.
#[derive(Debug, Args)]
pub struct MetricArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated protected columns the metric is built against.
    #[arg(long, value_delimiter = ',', required = true)]
    pub protected: Vec<String>,
    #[command(flatten)]
    pub run: RunArgs,
    /// Drop column names and group labels from the emitted file.
    #[arg(long)]
    pub strip_provenance: bool,
}

/// Training modes.
#[derive(Debug, Subcommand)]
pub enum TrainCommand {
    /// Unconstrained empirical-risk baseline.
    Erm(TrainErmArgs),
    /// Distributionally robust training under a fair metric.
    Sensr(TrainSensrArgs),
}

/// Arguments of `train erm`.
#[derive(Debug, Args)]
pub struct TrainErmArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Arguments of `train sensr`.
#[derive(Debug, Args)]
pub struct TrainSensrArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Fair-metric JSON file steering the robust perturbations.
    #[arg(long)]
    pub metric: PathBuf,
    /// Dual penalty used while training; wins over the config file.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Fair-neighborhood radius; wins over the config file.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Audit families.
#[derive(Debug, Subcommand)]
pub enum AuditCommand {
    /// Group fairness reports per protected attribute.
    Group(AuditGroupArgs),
    /// Exhaustive subgroup discrimination scan.
    Subgroup(AuditSubgroupArgs),
    /// Counterfactual decision consistency across feature values.
    Consistency(AuditConsistencyArgs),
    /// Distributionally robust fairness certificate.
    Drf(AuditDrfArgs),
    /// Prediction-to-fair-distance ratio quantiles over sampled pairs.
    Lipschitz(AuditLipschitzArgs),
    /// Cross-group feature swap effect on loss and decisions.
    Swap(AuditSwapArgs),
}

/// Arguments of `audit group`.
#[derive(Debug, Args)]
pub struct AuditGroupArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Model JSON file; omitted, the recorded outcomes are audited.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Comma-separated protected columns; defaults to all in the schema.
    #[arg(long, value_delimiter = ',')]
    pub protected: Vec<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Arguments of `audit subgroup`.
#[derive(Debug, Args)]
pub struct AuditSubgroupArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Model JSON file; omitted, the recorded outcomes are audited.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Protected column to split on; required when the schema has several.
    #[arg(long)]
    pub protected: Option<String>,
    /// Predicate depth, 1 or 2; wins over the config file.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Minimum rows per subgroup side; wins over the config file.
    #[arg(long)]
    pub min_support: Option<usize>,
    /// Reporting threshold on the corrected gap; wins over the config file.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Arguments of `audit consistency`.
#[derive(Debug, Args)]
pub struct AuditConsistencyArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Categorical feature column whose values are swapped in.
    #[arg(long)]
    pub feature: String,
    /// Comma-separated category values to compare.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Arguments of `audit drf`.
#[derive(Debug, Args)]
pub struct AuditDrfArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Fair-metric JSON file defining the neighborhood.
    #[arg(long)]
    pub metric: PathBuf,
    /// Fair-neighborhood radius; wins over the config file.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Arguments of `audit lipschitz`.
#[derive(Debug, Args)]
pub struct AuditLipschitzArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Fair-metric JSON file defining the denominator distance.
    #[arg(long)]
    pub metric: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Arguments of `audit swap`.
#[derive(Debug, Args)]
pub struct AuditSwapArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Non-protected feature column to resample across groups.
    #[arg(long)]
    pub feature: String,
    /// Categorical column defining the source and target groups.
    #[arg(long)]
    pub protected: String,
    /// Source and target category values, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Synthetic scenarios.
#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Two-type acceptance scenario with offsetting subgroup gaps.
    Table1(SimulateTable1Args),
}

/// Arguments of `simulate table1`.
#[derive(Debug, Args)]
pub struct SimulateTable1Args {
    /// Four per-cell acceptance rates; wins over the config file.
    #[arg(long, value_delimiter = ',')]
    pub rates: Option<Vec<f64>>,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Arguments of `reproduce-adult`.
#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Directory holding adult_train.csv and adult_test.csv.
    #[arg(long)]
    pub data_dir: PathBuf,
    /// Directory the report and manifest are written into.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Comma-separated training seeds.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub seeds: Vec<u64>,
}

/// Input dataset arguments shared by most commands.
#[derive(Debug, Args)]
pub struct InputArgs {
    /// Dataset CSV path.
    #[arg(long)]
    pub data: PathBuf,
    /// Schema JSON path, or one of the builtin names `adult` and `table1`.
    #[arg(long)]
    pub schema: String,
}

/// Output, seeding, and configuration arguments shared by most commands.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Output file path; a manifest sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Run seed; wins over the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON run-configuration file; flags win over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}
