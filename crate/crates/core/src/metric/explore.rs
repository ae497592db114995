//! Pair-logistic fair-metric learning: comparable/incomparable pair
//! construction and low-rank quadratic-form fitting.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{descend, sigmoid, softplus};
use crate::metric::{FairMetric, MetricKind};
use crate::stats::quantile;
use ndarray::{Array1, Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

/// Labeled row pairs: comparable (same outcome, different protected group)
/// or incomparable (different outcome).
#[derive(Debug, Clone)]
pub struct PairSet {
    /// (row i, row j, comparable).
    pub pairs: Vec<(usize, usize, bool)>,
    /// Protected column the comparability rule was applied to.
    pub protected: String,
}

impl PairSet {
    pub fn comparable_count(&self) -> usize {
        self.pairs.iter().filter(|p| p.2).count()
    }

    pub fn incomparable_count(&self) -> usize {
        self.pairs.len() - self.comparable_count()
    }
}

/// Draw `k` distinct values from [0, total) with a seeded generator.
/// Small spaces are shuffled exhaustively; large ones use rejection.
fn sample_distinct(rng: &mut ChaCha8Rng, total: usize, k: usize) -> Vec<usize> {
    assert!(k <= total);
    if total <= (2 * k).max(4096) {
        let mut all: Vec<usize> = (0..total).collect();
        all.shuffle(rng);
        all.truncate(k);
        all
    } else {
        let mut seen = HashSet::with_capacity(k * 2);
        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            let v = rng.random_range(0..total);
            if seen.insert(v) {
                out.push(v);
            }
        }
        out
    }
}

/// Sample up to `max_pairs_per_class` comparable pairs (same label,
/// different protected group) and the same number of incomparable pairs
/// (different labels), without replacement, deterministically per seed.
pub fn make_pairs(
    data: &Dataset,
    protected_name: &str,
    max_pairs_per_class: usize,
    seed: u64,
) -> Result<PairSet> {
    if max_pairs_per_class == 0 {
        return Err(Error::Argument("max_pairs_per_class must be positive".into()));
    }
    let codes = data.group_codes(protected_name)?;
    let mut observed: Vec<u32> = codes.to_vec();
    observed.sort_unstable();
    observed.dedup();
    if observed.len() != 2 {
        return Err(Error::Pairing(format!(
            "protected column '{protected_name}' must be binary-coded for pairing, found {} groups",
            observed.len()
        )));
    }
    let (g0, g1) = (observed[0], observed[1]);
    // cell[y][g-side] row indices
    let mut cells = [[Vec::new(), Vec::new()], [Vec::new(), Vec::new()]];
    for i in 0..data.n() {
        let side = usize::from(codes[i] == g1);
        cells[data.y[i] as usize][side].push(i);
    }
    for (y, row) in cells.iter().enumerate() {
        for (side, cell) in row.iter().enumerate() {
            if cell.is_empty() {
                let code = if side == 0 { g0 } else { g1 };
                let cat = data
                    .group_category(protected_name, code)
                    .unwrap_or("?")
                    .to_string();
                return Err(Error::Pairing(format!(
                    "empty (label={y}, {protected_name}={cat}) cell: cannot form pairs"
                )));
            }
        }
    }

    let s0 = cells[0][0].len() * cells[0][1].len();
    let s1 = cells[1][0].len() * cells[1][1].len();
    let neg: Vec<usize> = cells[0][0].iter().chain(&cells[0][1]).cloned().collect();
    let pos: Vec<usize> = cells[1][0].iter().chain(&cells[1][1]).cloned().collect();
    let s_inc = neg.len() * pos.len();
    let n_pairs = max_pairs_per_class.min(s0 + s1).min(s_inc);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = Vec::with_capacity(2 * n_pairs);
    for flat in sample_distinct(&mut rng, s0 + s1, n_pairs) {
        let (a, b) = if flat < s0 {
            let w = cells[0][1].len();
            (cells[0][0][flat / w], cells[0][1][flat % w])
        } else {
            let r = flat - s0;
            let w = cells[1][1].len();
            (cells[1][0][r / w], cells[1][1][r % w])
        };
        pairs.push((a, b, true));
    }
    for flat in sample_distinct(&mut rng, s_inc, n_pairs) {
        let w = pos.len();
        pairs.push((neg[flat / w], pos[flat % w], false));
    }
    Ok(PairSet {
        pairs,
        protected: protected_name.to_string(),
    })
}

/// Metric-learning controls for [`explore_fit`].
#[derive(Debug, Clone)]
pub struct ExploreConfig {
    /// Rank of the learned factor L (defaults to the full dimension).
    pub rank: Option<usize>,
    pub max_iter: usize,
    pub learning_rate: f64,
    pub grad_tol: f64,
}

impl Default for ExploreConfig {
    fn default() -> Self {
        ExploreConfig {
            rank: None,
            max_iter: 400,
            learning_rate: 0.1,
            grad_tol: 1e-6,
        }
    }
}

/// A learned metric with its logistic offset and training-loss trace.
#[derive(Debug, Clone)]
pub struct ExploreResult {
    pub metric: FairMetric,
    /// Offset c in P(comparable) = sigmoid(c - d_x(x_i, x_j)).
    pub offset: f64,
    pub loss_trace: Vec<f64>,
}

/// Mean pair-logistic loss and gradient at packed parameters
/// theta = [L row-major (d x rank), c].
///
/// The model is P(comparable) = sigmoid(c - |L' delta|^2) per pair
/// difference delta; exposed for gradient-oracle testing.
pub fn explore_objective(
    deltas: &Array2<f64>,
    targets: &[f64],
    rank: usize,
    theta: &Array1<f64>,
) -> (f64, Array1<f64>) {
    let p = deltas.nrows();
    let d = deltas.ncols();
    assert_eq!(theta.len(), d * rank + 1);
    assert_eq!(targets.len(), p);
    let l = ArrayView2::from_shape((d, rank), &theta.as_slice().unwrap()[..d * rank])
        .expect("parameter block reshapes");
    let c = theta[d * rank];
    let u = deltas.dot(&l); // p x rank
    let mut loss = 0.0;
    let mut resid = Array1::<f64>::zeros(p);
    for i in 0..p {
        let q: f64 = u.row(i).dot(&u.row(i));
        let z = c - q;
        loss += softplus(z) - targets[i] * z;
        resid[i] = sigmoid(z) - targets[i];
    }
    let inv = 1.0 / p as f64;
    loss *= inv;
    // dz/dL = -2 delta u'; chain through mean loss
    let mut ru = u;
    for i in 0..p {
        let r = resid[i];
        ru.row_mut(i).mapv_inplace(|v| v * r);
    }
    let grad_l = deltas.t().dot(&ru).mapv(|v| -2.0 * inv * v); // d x rank
    let mut grad = Array1::<f64>::zeros(d * rank + 1);
    grad.as_slice_mut()
        .unwrap()[..d * rank]
        .copy_from_slice(grad_l.as_slice().expect("contiguous"));
    grad[d * rank] = resid.sum() * inv;
    (loss, grad)
}

/// Learn Sigma = L L' and offset c by backtracking gradient descent on the
/// pair-logistic loss. The returned metric is PSD by construction.
pub fn explore_fit(
    data: &Dataset,
    pairs: &PairSet,
    config: &ExploreConfig,
) -> Result<ExploreResult> {
    let p = pairs.pairs.len();
    if p < 10 {
        return Err(Error::Pairing(format!(
            "explore needs at least 10 pairs, got {p}"
        )));
    }
    let d = data.d();
    let rank = config.rank.unwrap_or(d).clamp(1, d);
    if config.max_iter == 0 || !(config.learning_rate > 0.0) {
        return Err(Error::Argument(
            "explore config needs positive max_iter and learning_rate".into(),
        ));
    }

    let mut deltas = Array2::<f64>::zeros((p, d));
    let mut targets = Vec::with_capacity(p);
    for (row, &(i, j, comparable)) in pairs.pairs.iter().enumerate() {
        if i == j || i >= data.n() || j >= data.n() {
            return Err(Error::Pairing(format!(
                "pair ({i}, {j}) invalid for dataset of {} rows",
                data.n()
            )));
        }
        let diff = &data.row(i) - &data.row(j);
        deltas.row_mut(row).assign(&diff);
        targets.push(f64::from(u8::from(comparable)));
    }

    // Scale-aware start: identity-metric squared distances set the offset.
    let sq: Vec<f64> = (0..p).map(|r| deltas.row(r).dot(&deltas.row(r))).collect();
    let c0 = quantile(&sq, 0.5);
    let mut theta0 = Array1::<f64>::zeros(d * rank + 1);
    for k in 0..rank {
        theta0[k * rank + k] = 0.1; // 0.1 * identity slice, row-major
    }
    theta0[d * rank] = c0;

    let result = descend(
        theta0,
        |theta| explore_objective(&deltas, &targets, rank, theta),
        config.learning_rate,
        config.max_iter,
        config.grad_tol,
        30,
    );
    if let Some(step) = result.loss_trace.iter().position(|l| !l.is_finite()) {
        return Err(Error::Divergence {
            context: format!(
                "explore_fit step {step} (learning rate {})",
                config.learning_rate
            ),
        });
    }

    let l = ArrayView2::from_shape((d, rank), &result.params.as_slice().unwrap()[..d * rank])
        .expect("parameter block reshapes");
    let sigma = l.dot(&l.t());
    // exact symmetry against rounding
    let mut sym = sigma.clone();
    for i in 0..d {
        for j in 0..d {
            sym[[i, j]] = 0.5 * (sigma[[i, j]] + sigma[[j, i]]);
        }
    }
    let metric = FairMetric {
        sigma: sym,
        kind: MetricKind::Learned,
        provenance: vec![format!("learned-pairs:{}", pairs.protected)],
    };
    metric.validate()?;
    Ok(ExploreResult {
        metric,
        offset: result.params[d * rank],
        loss_trace: result.loss_trace,
    })
}
