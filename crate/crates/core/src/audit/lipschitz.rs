//! Empirical Lipschitz-ratio estimation: quantiles of output distance over
//! fair input distance on sampled pairs.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::metric::{fair_distance, FairMetric};
use crate::model::LinearModel;
use crate::stats::quantile;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Pairs closer than this in fair distance are treated as degenerate.
const MIN_PAIR_DISTANCE: f64 = 1e-9;

/// Quantiles of |p(x1) - p(x2)| / d_x(x1, x2) over sampled pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub median: f64,
    pub p95: f64,
    pub p99: f64,
    pub max: f64,
    /// Pairs that survived the degeneracy filter.
    pub n_pairs_used: usize,
    pub n_pairs_requested: usize,
    pub seed: u64,
}

/// Sample row pairs and report quantiles of the prediction-to-fair-distance
/// ratio; pairs with fair distance at or below 1e-9 are discarded.
pub fn lipschitz_ratio_audit(
    model: &LinearModel,
    metric: &FairMetric,
    data: &Dataset,
    n_pairs: usize,
    seed: u64,
) -> Result<LipschitzReport> {
    if n_pairs == 0 {
        return Err(Error::Argument("n_pairs must be at least 1".into()));
    }
    if data.n() < 2 {
        return Err(Error::Audit(
            "lipschitz audit needs at least two rows".into(),
        ));
    }
    let n = data.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(n_pairs);
    for _ in 0..n_pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let xi = data.row(i);
        let xj = data.row(j);
        let dx = fair_distance(metric, &xi, &xj)?;
        if dx <= MIN_PAIR_DISTANCE {
            continue;
        }
        let dy = (model.predict_proba(&xi)? - model.predict_proba(&xj)?).abs();
        ratios.push(dy / dx);
    }
    if ratios.is_empty() {
        return Err(Error::Audit(
            "all sampled pairs were degenerate under the fair metric".into(),
        ));
    }
    Ok(LipschitzReport {
        median: quantile(&ratios, 0.5),
        p95: quantile(&ratios, 0.95),
        p99: quantile(&ratios, 0.99),
        max: ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        n_pairs_used: ratios.len(),
        n_pairs_requested: n_pairs,
        seed,
    })
}
