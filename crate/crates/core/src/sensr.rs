//! Distributionally robust fairness: worst-case loss over fair
//! neighborhoods (dual surrogate), SenSR training, and proxy-swap stress
//! tests.

use crate::data::{ColumnKind, ColumnRole, Dataset, EncodedBlock};
use crate::error::{Error, Result};
use crate::linalg::{sigmoid, softplus};
use crate::metric::{fair_distance, FairMetric, MetricKind};
use crate::model::{batch_objective, class_weights, LinearModel, TrainConfig};
use crate::stats::{mean, quantile};
use ndarray::{Array1, ArrayView1};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Maximum step halvings in the inner ascent's backtracking search.
const PERTURB_MAX_HALVINGS: usize = 20;

/// Controls for the dual-surrogate worst-case estimate and SenSR training.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DRFConfig {
    /// Fair-neighborhood radius epsilon.
    pub epsilon: f64,
    /// Ascending positive dual-penalty candidates scanned by the audit.
    pub lambda_grid: Vec<f64>,
    /// Fixed dual penalty used while training.
    pub train_lambda: f64,
    pub inner_steps: usize,
    pub inner_lr: f64,
    pub seed: u64,
}

impl Default for DRFConfig {
    fn default() -> Self {
        DRFConfig {
            epsilon: 0.1,
            lambda_grid: vec![0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 50.0],
            train_lambda: 2.0,
            inner_steps: 10,
            inner_lr: 0.1,
            seed: 0,
        }
    }
}

impl DRFConfig {
    /// Reject empty or non-ascending grids and non-positive controls.
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config("epsilon must be a finite non-negative real".into()));
        }
        if self.lambda_grid.is_empty() {
            return Err(Error::Config("lambda grid must be non-empty".into()));
        }
        let ascending = self.lambda_grid.windows(2).all(|w| w[0] < w[1]);
        if !ascending || self.lambda_grid.iter().any(|l| *l <= 0.0 || !l.is_finite()) {
            return Err(Error::Config(
                "lambda grid must be strictly ascending positive reals".into(),
            ));
        }
        if !(self.train_lambda > 0.0 && self.train_lambda.is_finite()) {
            return Err(Error::Config("training lambda must be positive".into()));
        }
        if self.inner_steps == 0 {
            return Err(Error::Config("inner steps must be positive".into()));
        }
        if !(self.inner_lr > 0.0 && self.inner_lr.is_finite()) {
            return Err(Error::Config("inner learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Outcome of the inner fair-neighborhood ascent for one sample.
#[derive(Debug, Clone)]
pub struct PerturbResult {
    pub x_star: Array1<f64>,
    /// loss(x_star) - loss(x), recomputed from scratch at the end.
    pub loss_gain: f64,
    /// Fair squared distance d_x(x, x_star), recomputed likewise.
    pub fair_move: f64,
    pub steps_used: usize,
}

/// Backtracking search along one direction; returns (step, score, distance,
/// objective) of the first strictly improving trial, if any.
///
/// The score moves linearly and the penalty bilinearly in the step size, so
/// each trial costs O(1) given the three precomputed direction products.
#[allow(clippy::too_many_arguments)]
fn line_search(
    z: f64,
    dist: f64,
    phi: f64,
    yf: f64,
    lambda: f64,
    lr: f64,
    w_dir: f64,
    dir_sd: f64,
    dir_sdir: f64,
) -> Option<(f64, f64, f64, f64)> {
    let mut h = lr;
    for _ in 0..=PERTURB_MAX_HALVINGS {
        let zc = z + h * w_dir;
        let dc = dist + 2.0 * h * dir_sd + h * h * dir_sdir;
        let pc = softplus(zc) - yf * zc - lambda * dc;
        if pc > phi {
            return Some((h, zc, dc, pc));
        }
        h *= 0.5;
    }
    None
}

/// Gradient ascent on phi(x') = loss(x') - lambda * d_x(x, x') starting at
/// x' = x, with backtracking so phi never decreases across accepted steps.
///
/// When the full gradient is blocked at every step size and the metric is a
/// projection complement, the ascent falls back to the penalty-free
/// component of the gradient, so movement along sensitive directions
/// survives arbitrarily large lambda.
pub fn fair_perturb(
    model: &LinearModel,
    metric: &FairMetric,
    x: &ArrayView1<'_, f64>,
    y: u8,
    lambda: f64,
    steps: usize,
    lr: f64,
) -> Result<PerturbResult> {
    if metric.d() != x.len() {
        return Err(Error::Argument(format!(
            "metric dimension {} does not match input dimension {}",
            metric.d(),
            x.len()
        )));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Argument("perturbation lambda must be positive".into()));
    }
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::Argument("perturbation learning rate must be positive".into()));
    }
    let base_loss = model.loss(x, y)?;

    let mut cur = x.to_owned();
    let yf = f64::from(y);
    // Running state: score z, sd = Sigma (cur - x), fair distance, objective.
    let mut z = model.logit(x);
    let mut sd = Array1::<f64>::zeros(cur.len());
    let mut dist = 0.0;
    let mut phi = base_loss;
    let mut steps_used = 0;

    for _ in 0..steps {
        let r = sigmoid(z) - yf;
        let mut grad = model.w.mapv(|v| r * v);
        grad.scaled_add(-2.0 * lambda, &sd);
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("fair_perturb gradient is non-finite".into()));
        }
        if grad.dot(&grad) <= 1e-24 {
            break;
        }
        let sgrad = metric.sigma.dot(&grad);
        let mut hit = line_search(
            z,
            dist,
            phi,
            yf,
            lambda,
            lr,
            model.w.dot(&grad),
            grad.dot(&sd),
            grad.dot(&sgrad),
        );
        let (mut dir, mut sdir) = (grad, sgrad);
        if hit.is_none() && metric.kind == MetricKind::ProjectionComplement {
            // Null-space fallback: (I - Sigma) projects onto span(V), where
            // movement is free, so only the loss term gates acceptance.
            let free = &dir - &sdir;
            if free.dot(&free) > 1e-24 {
                let sfree = &sdir - &metric.sigma.dot(&sdir);
                hit = line_search(
                    z,
                    dist,
                    phi,
                    yf,
                    lambda,
                    lr,
                    model.w.dot(&free),
                    free.dot(&sd),
                    free.dot(&sfree),
                );
                dir = free;
                sdir = sfree;
            }
        }
        match hit {
            Some((h, zc, dc, pc)) => {
                cur.scaled_add(h, &dir);
                sd.scaled_add(h, &sdir);
                z = zc;
                dist = dc;
                phi = pc;
                steps_used += 1;
            }
            None => break,
        }
    }

    let fair_move = fair_distance(metric, &cur.view(), x)?;
    let loss_gain = model.loss(&cur.view(), y)? - base_loss;
    Ok(PerturbResult {
        x_star: cur,
        loss_gain,
        fair_move,
        steps_used,
    })
}

/// Summary statistics of the per-sample inner-maximization loss gains.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GainSummary {
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
}

/// Worst-case loss estimate over the fair epsilon-neighborhood.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DRFReport {
    pub epsilon: f64,
    /// Estimated bound delta: grid minimum of the dual objective.
    pub delta_hat: f64,
    /// Grid argmin; ties resolve toward the smaller lambda.
    pub lambda_star: f64,
    pub per_sample_gains: GainSummary,
    /// Config echo for audit-trail reproducibility.
    pub config: DRFConfig,
}

/// Estimate the worst-case mean loss over the fair epsilon-neighborhood by
/// minimizing the penalized dual objective over the lambda grid.
pub fn drf_audit(
    model: &LinearModel,
    metric: &FairMetric,
    data: &Dataset,
    config: &DRFConfig,
) -> Result<DRFReport> {
    config.validate()?;
    if data.n() == 0 {
        return Err(Error::Audit("drf_audit needs a non-empty dataset".into()));
    }
    let n = data.n();
    let base: Vec<f64> = (0..n)
        .map(|i| model.loss(&data.row(i), data.y[i]))
        .collect::<Result<_>>()?;
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    for &lambda in &config.lambda_grid {
        let mut sum = 0.0;
        let mut gains = Vec::with_capacity(n);
        for (i, base_loss) in base.iter().enumerate() {
            let p = fair_perturb(
                model,
                metric,
                &data.row(i),
                data.y[i],
                lambda,
                config.inner_steps,
                config.inner_lr,
            )?;
            sum += base_loss + p.loss_gain - lambda * p.fair_move;
            gains.push(p.loss_gain);
        }
        let objective = sum / n as f64 + lambda * config.epsilon;
        if best.as_ref().is_none_or(|(b, _, _)| objective < *b) {
            best = Some((objective, lambda, gains));
        }
    }
    let (delta_hat, lambda_star, gains) = best.expect("validated grid is non-empty");
    Ok(DRFReport {
        epsilon: config.epsilon,
        delta_hat,
        lambda_star,
        per_sample_gains: GainSummary {
            mean: mean(&gains),
            median: quantile(&gains, 0.5),
            p95: quantile(&gains, 0.95),
            max: gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        },
        config: config.clone(),
    })
}

/// SenSR training outcome with per-epoch loss diagnostics.
#[derive(Debug, Clone)]
pub struct SensrResult {
    pub model: LinearModel,
    /// Weighted training objective on the unperturbed data, per epoch.
    pub clean_loss: Vec<f64>,
    /// Weighted mean loss at the perturbed samples seen during each epoch.
    pub robust_loss: Vec<f64>,
}

/// SenSR: mini-batch training where every batch sample is first moved to
/// its fair-neighborhood worst case at the fixed training lambda.
pub fn sensr_train(
    data: &Dataset,
    metric: &FairMetric,
    train_config: &TrainConfig,
    drf_config: &DRFConfig,
) -> Result<SensrResult> {
    train_config.validate()?;
    drf_config.validate()?;
    metric.validate()?;
    if metric.d() != data.d() {
        return Err(Error::Argument(format!(
            "metric dimension {} does not match data dimension {}",
            metric.d(),
            data.d()
        )));
    }
    let weights = class_weights(&data.y, train_config.class_balance)?;
    let n = data.n();
    let d = data.d();
    let all_rows: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(train_config.seed);
    let mut w = Array1::<f64>::zeros(d);
    let mut b = 0.0;
    let mut order = all_rows.clone();
    let mut clean_loss = Vec::with_capacity(train_config.epochs);
    let mut robust_loss = Vec::with_capacity(train_config.epochs);
    for epoch in 0..train_config.epochs {
        order.shuffle(&mut rng);
        let mut robust_sum = 0.0;
        for batch in order.chunks(train_config.batch_size.min(n)) {
            let model = LinearModel {
                w: w.clone(),
                b,
                threshold: 0.5,
            };
            let mut gw = Array1::<f64>::zeros(d);
            let mut gb = 0.0;
            for &i in batch {
                let y = data.y[i];
                let p = fair_perturb(
                    &model,
                    metric,
                    &data.row(i),
                    y,
                    drf_config.train_lambda,
                    drf_config.inner_steps,
                    drf_config.inner_lr,
                )?;
                let z = w.dot(&p.x_star) + b;
                let yf = f64::from(y);
                let cw = weights[y as usize];
                robust_sum += cw * (softplus(z) - yf * z);
                let r = cw * (sigmoid(z) - yf);
                gw.scaled_add(r, &p.x_star);
                gb += r;
            }
            let inv = 1.0 / batch.len() as f64;
            gw *= inv;
            gb *= inv;
            gw.scaled_add(train_config.l2, &w);
            w.scaled_add(-train_config.learning_rate, &gw);
            b -= train_config.learning_rate * gb;
        }
        let (clean, _, _) = batch_objective(data, &all_rows, weights, train_config.l2, &w, b);
        if !clean.is_finite() {
            return Err(Error::Divergence {
                context: format!("sensr_train epoch {epoch}"),
            });
        }
        clean_loss.push(clean);
        robust_loss.push(robust_sum / n as f64);
    }
    Ok(SensrResult {
        model: LinearModel {
            w,
            b,
            threshold: 0.5,
        },
        clean_loss,
        robust_loss,
    })
}

/// Picks dataset rows where a categorical column takes one value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSelector {
    pub column: String,
    pub value: String,
}

/// Rows matched by a selector: the label column, a protected grouping, or
/// an encoded categorical feature, in that resolution order.
pub fn selector_rows(data: &Dataset, sel: &GroupSelector) -> Result<Vec<usize>> {
    let (_, spec) = data
        .schema
        .column(&sel.column)
        .ok_or_else(|| Error::Selector(format!("unknown selector column '{}'", sel.column)))?;
    if spec.kind != ColumnKind::Categorical {
        return Err(Error::Selector(format!(
            "selector column '{}' is not categorical",
            sel.column
        )));
    }
    let code = spec
        .categories
        .iter()
        .position(|c| c == &sel.value)
        .ok_or_else(|| {
            Error::Selector(format!(
                "column '{}' has no category '{}'",
                sel.column, sel.value
            ))
        })?;
    let rows: Vec<usize> = if spec.role == ColumnRole::Label {
        (0..data.n()).filter(|&i| data.y[i] as usize == code).collect()
    } else if let Some(codes) = data.groups.get(&sel.column) {
        (0..data.n()).filter(|&i| codes[i] as usize == code).collect()
    } else if let Some(block) = data.schema.block_of(&sel.column) {
        (0..data.n())
            .filter(|&i| block_code(&data.row(i), &block) == code)
            .collect()
    } else {
        return Err(Error::Selector(format!(
            "selector column '{}' is not represented in the dataset",
            sel.column
        )));
    };
    if rows.is_empty() {
        return Err(Error::Selector(format!(
            "selector {}={} matches no rows",
            sel.column, sel.value
        )));
    }
    Ok(rows)
}

/// Index of the active category within a one-hot block.
fn block_code(x: &ArrayView1<'_, f64>, block: &EncodedBlock) -> usize {
    let mut best = 0;
    for k in 1..block.width {
        if x[block.offset + k] > x[block.offset + best] {
            best = k;
        }
    }
    best
}

/// Before/after effect of resampling one feature across groups.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SwapReport {
    pub feature: String,
    pub source: GroupSelector,
    pub target: GroupSelector,
    pub seed: u64,
    pub n_source: usize,
    pub n_target: usize,
    /// Mean loss over all rows before the swap.
    pub loss_before: f64,
    /// Mean loss over all rows on the counterfactual dataset.
    pub loss_after: f64,
    pub loss_delta: f64,
    /// Fraction of all rows whose decision changed.
    pub flip_rate: f64,
}

/// Replace the named feature among source-group rows with values resampled
/// from the target group's empirical distribution, and report the loss and
/// decision shift.
pub fn swap_audit(
    model: &LinearModel,
    data: &Dataset,
    feature_name: &str,
    source: &GroupSelector,
    target: &GroupSelector,
    seed: u64,
) -> Result<SwapReport> {
    let (_, spec) = data.schema.column(feature_name).ok_or_else(|| {
        Error::Argument(format!("unknown feature column '{feature_name}'"))
    })?;
    if spec.is_protected() || spec.role != ColumnRole::Feature {
        return Err(Error::Argument(format!(
            "swap feature '{feature_name}' must be a non-protected feature column"
        )));
    }
    let block = data.schema.block_of(feature_name).ok_or_else(|| {
        Error::Argument(format!("feature '{feature_name}' is not encoded"))
    })?;
    let src_rows = selector_rows(data, source)?;
    let tgt_rows = selector_rows(data, target)?;

    let mut x = data.x.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match block.kind {
        ColumnKind::Numeric => {
            let pool: Vec<f64> = tgt_rows.iter().map(|&i| data.x[[i, block.offset]]).collect();
            for &i in &src_rows {
                x[[i, block.offset]] = pool[rng.random_range(0..pool.len())];
            }
        }
        ColumnKind::Categorical => {
            let pool: Vec<usize> = tgt_rows
                .iter()
                .map(|&i| block_code(&data.row(i), &block))
                .collect();
            for &i in &src_rows {
                let code = pool[rng.random_range(0..pool.len())];
                for k in 0..block.width {
                    x[[i, block.offset + k]] = f64::from(k == code);
                }
            }
        }
    }

    let n = data.n();
    let mut loss_before = 0.0;
    let mut loss_after = 0.0;
    let mut flips = 0usize;
    for i in 0..n {
        let before = data.row(i);
        let after = x.row(i);
        loss_before += model.loss(&before, data.y[i])?;
        loss_after += model.loss(&after, data.y[i])?;
        let d_before = u8::from(sigmoid(model.logit(&before)) >= model.threshold);
        let d_after = u8::from(sigmoid(model.logit(&after)) >= model.threshold);
        if d_before != d_after {
            flips += 1;
        }
    }
    loss_before /= n as f64;
    loss_after /= n as f64;
    Ok(SwapReport {
        feature: feature_name.to_string(),
        source: source.clone(),
        target: target.clone(),
        seed,
        n_source: src_rows.len(),
        n_target: tgt_rows.len(),
        loss_before,
        loss_after,
        loss_delta: loss_after - loss_before,
        flip_rate: flips as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_table1;
    use crate::metric::projection_complement;
    use crate::metric::subspace::{DirectionKind, DirectionSource, SensitiveDirections};
    use crate::model::erm_train;
    use crate::testutil::dataset_from;
    use ndarray::{array, Array2};

    fn pc_metric(vs: Vec<Array1<f64>>, d: usize) -> FairMetric {
        let source = vs
            .iter()
            .map(|_| DirectionSource {
                kind: DirectionKind::ProtectedIndicator,
                column: "g".into(),
                low_signal: false,
                holdout_balanced_accuracy: None,
            })
            .collect();
        projection_complement(&SensitiveDirections { v: vs, source }, d).unwrap()
    }

    #[test]
    fn zero_steps_returns_anchor_exactly() {
        let model = LinearModel {
            w: array![1.0, -2.0],
            b: 0.3,
            threshold: 0.5,
        };
        let metric = FairMetric::identity(2);
        let x = array![0.7, -0.1];
        let p = fair_perturb(&model, &metric, &x.view(), 1, 2.0, 0, 0.1).unwrap();
        assert_eq!(p.x_star, x);
        assert_eq!(p.loss_gain, 0.0);
        assert_eq!(p.fair_move, 0.0);
        assert_eq!(p.steps_used, 0);
    }

    #[test]
    fn zero_model_stays_put() {
        let model = LinearModel::zeros(3);
        let metric = FairMetric::identity(3);
        let x = array![1.0, 2.0, 3.0];
        let p = fair_perturb(&model, &metric, &x.view(), 0, 1.0, 10, 0.1).unwrap();
        assert_eq!(p.x_star, x);
        assert_eq!(p.loss_gain, 0.0);
        assert_eq!(p.steps_used, 0);
    }

    #[test]
    fn loss_gain_is_nonnegative_and_ascent_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let d = 2 + rng.random_range(0..4usize);
            let w = Array1::from_iter((0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0));
            let model = LinearModel {
                w,
                b: rng.random::<f64>() - 0.5,
                threshold: 0.5,
            };
            let metric = FairMetric::identity(d);
            let x = Array1::from_iter((0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0));
            let y = u8::from(rng.random::<f64>() < 0.5);
            let p = fair_perturb(&model, &metric, &x.view(), y, 1.0, 8, 0.2).unwrap();
            assert!(p.loss_gain >= 0.0, "loss gain {}", p.loss_gain);
            assert!(p.fair_move >= 0.0);
            // the inner objective at the result beats the starting point
            assert!(p.loss_gain - 1.0 * p.fair_move >= -1e-9);
        }
    }

    #[test]
    fn huge_lambda_confines_movement_to_sensitive_span() {
        // V = span(e0); with lambda = 1e9 the active component is frozen
        // but the free component still climbs the loss.
        let metric = pc_metric(vec![array![1.0, 0.0, 0.0]], 3);
        let model = LinearModel {
            w: array![1.5, 1.0, -2.0],
            b: 0.1,
            threshold: 0.5,
        };
        let x = array![0.2, -0.4, 0.3];
        let p = fair_perturb(&model, &metric, &x.view(), 0, 1e9, 10, 0.1).unwrap();
        let disp = &p.x_star - &x;
        let active = metric.sigma.dot(&disp);
        assert!(
            active.dot(&active).sqrt() <= 1e-3,
            "active displacement {}",
            active.dot(&active).sqrt()
        );
        assert!(disp[0].abs() > 1e-3, "no movement along span(V)");
        assert!(p.loss_gain > 0.0);
    }

    #[test]
    fn null_space_moves_cost_nothing() {
        let v = array![1.0, 1.0, 0.0] / 2.0f64.sqrt();
        let metric = pc_metric(vec![v.clone()], 3);
        let x = array![0.3, -0.2, 0.9];
        let shifted = &x + &v.mapv(|t| 2.5 * t);
        let d = fair_distance(&metric, &shifted.view(), &x.view()).unwrap();
        assert!(d <= 1e-8, "null-space move cost {d}");
    }

    #[test]
    fn non_finite_gradient_is_numeric_error() {
        let model = LinearModel {
            w: array![f64::NAN, 1.0],
            b: 0.0,
            threshold: 0.5,
        };
        let metric = FairMetric::identity(2);
        let x = array![1.0, 1.0];
        let err = fair_perturb(&model, &metric, &x.view(), 1, 1.0, 5, 0.1).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)), "{err}");
    }

    fn small_classification(seed: u64, n: usize) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::<f64>::zeros((n, 3));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = rng.random::<f64>() < 0.5;
            // f0: sensitive proxy, f1: honest signal, f2: noise
            x[[i, 0]] = if label { 1.0 } else { -1.0 };
            x[[i, 1]] = (if label { 0.8 } else { -0.8 }) + rng.random::<f64>() - 0.5;
            x[[i, 2]] = rng.random::<f64>() - 0.5;
            y.push(u8::from(label));
        }
        dataset_from(x, y)
    }

    #[test]
    fn drf_is_monotone_in_epsilon_and_bounds_plain_risk() {
        let data = small_classification(11, 120);
        let model = erm_train(&data, &TrainConfig::default()).unwrap();
        let metric = pc_metric(vec![array![1.0, 0.0, 0.0]], 3);
        let risk = (0..data.n())
            .map(|i| model.loss(&data.row(i), data.y[i]).unwrap())
            .sum::<f64>()
            / data.n() as f64;
        let mut last = f64::NEG_INFINITY;
        for eps in [0.0, 0.01, 0.1, 0.5, 1.0] {
            let config = DRFConfig {
                epsilon: eps,
                ..DRFConfig::default()
            };
            let report = drf_audit(&model, &metric, &data, &config).unwrap();
            assert!(report.delta_hat >= risk - 1e-12, "delta below plain risk");
            assert!(
                report.delta_hat >= last - 1e-12,
                "delta_hat not monotone at eps {eps}"
            );
            last = report.delta_hat;
        }
    }

    #[test]
    fn epsilon_zero_with_huge_lambda_recovers_plain_risk() {
        let data = small_classification(12, 100);
        let model = erm_train(&data, &TrainConfig::default()).unwrap();
        let metric = FairMetric::identity(3);
        let risk = (0..data.n())
            .map(|i| model.loss(&data.row(i), data.y[i]).unwrap())
            .sum::<f64>()
            / data.n() as f64;
        let config = DRFConfig {
            epsilon: 0.0,
            lambda_grid: vec![1.0, 1e9],
            ..DRFConfig::default()
        };
        let report = drf_audit(&model, &metric, &data, &config).unwrap();
        assert!((report.delta_hat - risk).abs() <= 1e-3);
        assert!(report.delta_hat >= risk - 1e-12);
    }

    #[test]
    fn separable_data_with_identity_metric_pays_a_premium() {
        let data = small_classification(13, 100);
        let model = erm_train(&data, &TrainConfig::default()).unwrap();
        let metric = FairMetric::identity(3);
        let risk = (0..data.n())
            .map(|i| model.loss(&data.row(i), data.y[i]).unwrap())
            .sum::<f64>()
            / data.n() as f64;
        let config = DRFConfig {
            epsilon: 1.0,
            ..DRFConfig::default()
        };
        let report = drf_audit(&model, &metric, &data, &config).unwrap();
        assert!(
            report.delta_hat >= risk + 0.1,
            "delta {} risk {risk}",
            report.delta_hat
        );
    }

    #[test]
    fn empty_or_unsorted_grid_is_config_error() {
        let data = small_classification(14, 20);
        let model = LinearModel::zeros(3);
        let metric = FairMetric::identity(3);
        let empty = DRFConfig {
            lambda_grid: vec![],
            ..DRFConfig::default()
        };
        assert!(matches!(
            drf_audit(&model, &metric, &data, &empty).unwrap_err(),
            Error::Config(_)
        ));
        let unsorted = DRFConfig {
            lambda_grid: vec![2.0, 1.0],
            ..DRFConfig::default()
        };
        assert!(matches!(
            drf_audit(&model, &metric, &data, &unsorted).unwrap_err(),
            Error::Config(_)
        ));
    }

    #[test]
    fn tie_break_prefers_smaller_lambda() {
        // zero model: inner max equals ln 2 for every lambda, epsilon = 0
        // makes all objectives equal, so the first grid entry must win.
        let data = small_classification(15, 30);
        let model = LinearModel::zeros(3);
        let metric = FairMetric::identity(3);
        let config = DRFConfig {
            epsilon: 0.0,
            ..DRFConfig::default()
        };
        let report = drf_audit(&model, &metric, &data, &config).unwrap();
        assert_eq!(report.lambda_star, 0.1);
    }

    #[test]
    fn pinned_perturbations_reduce_to_erm() {
        let data = small_classification(16, 160);
        let train = TrainConfig {
            batch_size: 16,
            epochs: 25,
            ..TrainConfig::default()
        };
        let drf = DRFConfig {
            train_lambda: 1e9,
            ..DRFConfig::default()
        };
        let metric = FairMetric::identity(3);
        let sensr = sensr_train(&data, &metric, &train, &drf).unwrap();
        let erm = erm_train(&data, &train).unwrap();
        let max_diff = sensr
            .model
            .w
            .iter()
            .zip(erm.w.iter())
            .map(|(a, b)| (a - b).abs())
            .fold((sensr.model.b - erm.b).abs(), f64::max);
        assert!(max_diff <= 1e-3, "parameter gap {max_diff}");
        assert_eq!(sensr.clean_loss.len(), 25);
        assert_eq!(sensr.robust_loss.len(), 25);
    }

    #[test]
    fn free_adversary_shrinks_proxy_weight() {
        let data = small_classification(17, 400);
        let train = TrainConfig {
            batch_size: 32,
            epochs: 80,
            ..TrainConfig::default()
        };
        let erm = erm_train(&data, &train).unwrap();
        let metric = FairMetric {
            sigma: Array2::zeros((3, 3)),
            kind: MetricKind::Learned,
            provenance: vec!["zero".into()],
        };
        let drf = DRFConfig {
            inner_lr: 1.0,
            ..DRFConfig::default()
        };
        let sensr = sensr_train(&data, &metric, &train, &drf).unwrap();
        assert!(
            sensr.model.w[0].abs() <= 0.1 * erm.w[0].abs(),
            "proxy weight {} vs erm {}",
            sensr.model.w[0],
            erm.w[0]
        );
    }

    #[test]
    fn sensr_beats_erm_on_its_own_audit() {
        let data = small_classification(18, 300);
        let pair = data.split(0.3, 7).unwrap();
        let train = TrainConfig {
            batch_size: 32,
            epochs: 60,
            ..TrainConfig::default()
        };
        let metric = pc_metric(vec![array![1.0, 0.0, 0.0]], 3);
        let erm = erm_train(&pair.train, &train).unwrap();
        let sensr = sensr_train(&pair.train, &metric, &train, &DRFConfig::default()).unwrap();
        let config = DRFConfig::default();
        let erm_report = drf_audit(&erm, &metric, &pair.test, &config).unwrap();
        let sensr_report = drf_audit(&sensr.model, &metric, &pair.test, &config).unwrap();
        assert!(
            sensr_report.delta_hat <= erm_report.delta_hat + 1e-3,
            "sensr {} vs erm {}",
            sensr_report.delta_hat,
            erm_report.delta_hat
        );
    }

    #[test]
    fn swap_of_unused_feature_changes_nothing() {
        let data = synth_table1(50, 3, TABLE1_RATES).unwrap();
        // weight only on the financial coordinates, none on the type block
        let model = LinearModel {
            w: array![0.0, 0.0, 1.0, -0.5],
            b: 0.0,
            threshold: 0.5,
        };
        let report = swap_audit(
            &model,
            &data,
            "type",
            &GroupSelector {
                column: "race".into(),
                value: "Black".into(),
            },
            &GroupSelector {
                column: "race".into(),
                value: "White".into(),
            },
            0,
        )
        .unwrap();
        assert_eq!(report.loss_delta, 0.0);
        assert_eq!(report.flip_rate, 0.0);
    }

    const TABLE1_RATES: [f64; 4] = [0.80, 0.20, 0.60, 0.40];

    #[test]
    fn type_swap_across_race_flips_decisions() {
        let data = synth_table1(500, 4, TABLE1_RATES).unwrap();
        let model = erm_train(&data, &TrainConfig::default()).unwrap();
        let report = swap_audit(
            &model,
            &data,
            "type",
            &GroupSelector {
                column: "race".into(),
                value: "Black".into(),
            },
            &GroupSelector {
                column: "race".into(),
                value: "White".into(),
            },
            1,
        )
        .unwrap();
        assert!(report.flip_rate >= 0.10, "flip rate {}", report.flip_rate);
        assert_eq!(report.n_source, 1000);
        assert_eq!(report.n_target, 1000);
    }

    #[test]
    fn self_swap_within_aligned_group_is_null() {
        let data = synth_table1(100, 5, TABLE1_RATES).unwrap();
        let model = erm_train(&data, &TrainConfig::default()).unwrap();
        let sel = GroupSelector {
            column: "type".into(),
            value: "1".into(),
        };
        let report = swap_audit(&model, &data, "type", &sel, &sel, 2).unwrap();
        assert_eq!(report.flip_rate, 0.0);
        assert_eq!(report.loss_delta, 0.0);
    }

    #[test]
    fn selector_and_feature_validation_errors() {
        let data = synth_table1(20, 6, TABLE1_RATES).unwrap();
        let model = LinearModel::zeros(4);
        let good = GroupSelector {
            column: "race".into(),
            value: "Black".into(),
        };
        let bad_value = GroupSelector {
            column: "race".into(),
            value: "Green".into(),
        };
        assert!(matches!(
            swap_audit(&model, &data, "type", &good, &bad_value, 0).unwrap_err(),
            Error::Selector(_)
        ));
        // protected columns cannot be swapped
        assert!(matches!(
            swap_audit(&model, &data, "race", &good, &good, 0).unwrap_err(),
            Error::Argument(_)
        ));
        // numeric columns cannot select
        let numeric = GroupSelector {
            column: "balance".into(),
            value: "1".into(),
        };
        assert!(matches!(
            swap_audit(&model, &data, "type", &numeric, &good, 0).unwrap_err(),
            Error::Selector(_)
        ));
    }

    #[test]
    fn drf_report_round_trips_through_json() {
        let data = small_classification(19, 40);
        let model = erm_train(&data, &TrainConfig::default()).unwrap();
        let metric = FairMetric::identity(3);
        let report = drf_audit(&model, &metric, &data, &DRFConfig::default()).unwrap();
        let text = serde_json::to_string(&report).unwrap();
        let back: DRFReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back.delta_hat, report.delta_hat);
        assert_eq!(back.lambda_star, report.lambda_star);
        assert_eq!(back.config.lambda_grid, report.config.lambda_grid);
    }
}
