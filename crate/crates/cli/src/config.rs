//! Run configuration: JSON sections with defaults, overridden by flags.

use std::path::Path;

use fairkit::data::TABLE1_DEFAULT_RATES;
use fairkit::digest::sha256_hex;
use fairkit::metric::ExploreConfig;
use fairkit::model::TrainConfig;
use fairkit::sensr::DRFConfig;
use fairkit::{Error, Result};
use serde::{Deserialize, Serialize};

/// Whole-run configuration; every section has working defaults.
///
/// One run seed governs all seeded stages: `apply_seed` stamps it into the
/// training and robustness sections, so per-section seeds in a config file
/// are recorded but not honored.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Run seed; a `--seed` flag wins over this value.
    pub seed: u64,
    /// Baseline gradient-descent controls (`train erm`).
    pub train: TrainConfig,
    /// Robust-training controls (`train sensr`).
    pub sensr_train: TrainConfig,
    /// Neighborhood, dual-penalty, and inner-ascent controls.
    pub drf: DRFConfig,
    pub explore: ExploreSettings,
    pub subspace: SubspaceSettings,
    pub subgroup: SubgroupSettings,
    pub lipschitz: LipschitzSettings,
    pub simulate: SimulateSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            train: TrainConfig::default(),
            sensr_train: TrainConfig {
                learning_rate: 0.08,
                epochs: 18,
                batch_size: 256,
                l2: 1e-4,
                seed: 0,
                class_balance: true,
            },
            drf: DRFConfig::default(),
            explore: ExploreSettings::default(),
            subspace: SubspaceSettings::default(),
            subgroup: SubgroupSettings::default(),
            lipschitz: LipschitzSettings::default(),
            simulate: SimulateSettings::default(),
        }
    }
}

impl RunConfig {
    /// Load from a JSON file, or defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<RunConfig> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Io(format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("invalid config {}: {e}", p.display())))
            }
        }
    }

    /// Resolve the effective run seed and stamp it into every seeded section.
    pub fn apply_seed(&mut self, flag: Option<u64>) {
        if let Some(s) = flag {
            self.seed = s;
        }
        self.train.seed = self.seed;
        self.sensr_train.seed = self.seed;
        self.drf.seed = self.seed;
    }

    /// Digest of the effective configuration's canonical JSON form.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        sha256_hex(text.as_bytes())
    }
}

/// Pair sampling and fitting controls for the learned metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExploreSettings {
    /// Comparable and incomparable pairs sampled per protected column.
    pub max_pairs_per_class: usize,
    /// Factor rank; `null` means the full feature dimension.
    pub rank: Option<usize>,
    pub max_iter: usize,
    pub learning_rate: f64,
    pub grad_tol: f64,
}

impl Default for ExploreSettings {
    fn default() -> Self {
        let base = ExploreConfig::default();
        ExploreSettings {
            max_pairs_per_class: 1000,
            rank: base.rank,
            max_iter: base.max_iter,
            learning_rate: base.learning_rate,
            grad_tol: base.grad_tol,
        }
    }
}

impl ExploreSettings {
    /// Core fitting configuration carrying these settings.
    pub fn to_explore_config(&self) -> ExploreConfig {
        ExploreConfig {
            rank: self.rank,
            max_iter: self.max_iter,
            learning_rate: self.learning_rate,
            grad_tol: self.grad_tol,
        }
    }
}

/// Sensitive-direction fitting controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubspaceSettings {
    /// Also span the one-hot indicator columns of each protected attribute.
    pub include_indicators: bool,
}

impl Default for SubspaceSettings {
    fn default() -> Self {
        SubspaceSettings { include_indicators: true }
    }
}

/// Subgroup-scan controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SubgroupSettings {
    /// Predicate depth, 1 or 2.
    pub depth: usize,
    /// Minimum rows per subgroup side.
    pub min_support: usize,
    /// Reporting threshold on the significance-corrected gap.
    pub threshold: f64,
    /// Scan metric: acceptance-rate, TPR, FPR, or PPV.
    pub metric: String,
}

impl Default for SubgroupSettings {
    fn default() -> Self {
        SubgroupSettings {
            depth: 1,
            min_support: 100,
            threshold: 0.05,
            metric: "acceptance-rate".to_string(),
        }
    }
}

/// Ratio-audit sampling controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LipschitzSettings {
    /// Row pairs sampled for the ratio quantiles.
    pub n_pairs: usize,
}

impl Default for LipschitzSettings {
    fn default() -> Self {
        LipschitzSettings { n_pairs: 1000 }
    }
}

/// Synthetic-scenario controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSettings {
    /// Rows per (race, type) cell.
    pub n_per_cell: usize,
    /// Acceptance rates for the four cells.
    pub rates: [f64; 4],
}

impl Default for SimulateSettings {
    fn default() -> Self {
        SimulateSettings {
            n_per_cell: 10_000,
            rates: TABLE1_DEFAULT_RATES,
        }
    }
}
