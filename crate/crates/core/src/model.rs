//! Linear probabilistic classifiers with analytic gradients and
//! empirical-risk baseline training.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{descend, sigmoid, softplus};
use ndarray::{Array1, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Logistic scoring model with a decision threshold on the probability.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub w: Array1<f64>,
    pub b: f64,
    /// Probability cutoff in (0,1); scores at or above it decide positive.
    pub threshold: f64,
}

/// Gradient-descent controls for baseline training.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
    /// Reweight per-class losses by inverse class frequency so balanced
    /// accuracy is the natural training target.
    pub class_balance: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 500,
            batch_size: usize::MAX,
            l2: 1e-4,
            seed: 0,
            class_balance: true,
        }
    }
}

impl TrainConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument("learning rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Argument("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Argument("batch size must be positive".into()));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::Argument("l2 must be non-negative".into()));
        }
        Ok(())
    }
}

impl LinearModel {
    /// A zero model of the given dimension (predicts 0.5 everywhere).
    pub fn zeros(d: usize) -> Self {
        LinearModel {
            w: Array1::zeros(d),
            b: 0.0,
            threshold: 0.5,
        }
    }

    /// Raw score w'x + b without a dimension check (callers validate once).
    pub fn logit(&self, x: &ArrayView1<'_, f64>) -> f64 {
        self.w.dot(x) + self.b
    }

    /// P(y = 1 | x).
    pub fn predict_proba(&self, x: &ArrayView1<'_, f64>) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(sigmoid(self.logit(x)))
    }

    /// Thresholded decision.
    pub fn decide(&self, x: &ArrayView1<'_, f64>) -> Result<u8> {
        Ok(u8::from(self.predict_proba(x)? >= self.threshold))
    }

    /// Decisions for every row of a dataset.
    pub fn decide_all(&self, data: &Dataset) -> Result<Vec<u8>> {
        self.check_dim(data.d())?;
        Ok((0..data.n())
            .map(|i| u8::from(sigmoid(self.logit(&data.row(i))) >= self.threshold))
            .collect())
    }

    /// Binary cross-entropy of the prediction at (x, y).
    pub fn loss(&self, x: &ArrayView1<'_, f64>, y: u8) -> Result<f64> {
        self.check_dim(x.len())?;
        check_label(y)?;
        let z = self.logit(x);
        Ok(softplus(z) - f64::from(y) * z)
    }

    /// Gradient of the cross-entropy with respect to (w, b).
    pub fn loss_grad_params(&self, x: &ArrayView1<'_, f64>, y: u8) -> Result<(Array1<f64>, f64)> {
        self.check_dim(x.len())?;
        check_label(y)?;
        let r = sigmoid(self.logit(x)) - f64::from(y);
        Ok((x.mapv(|v| r * v), r))
    }

    /// Gradient of the cross-entropy with respect to the input x.
    pub fn loss_grad_input(&self, x: &ArrayView1<'_, f64>, y: u8) -> Result<Array1<f64>> {
        self.check_dim(x.len())?;
        check_label(y)?;
        let r = sigmoid(self.logit(x)) - f64::from(y);
        Ok(self.w.mapv(|v| r * v))
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.w.len() {
            return Err(Error::Argument(format!(
                "input dimension {len} does not match model dimension {}",
                self.w.len()
            )));
        }
        Ok(())
    }

    /// Serialize to the model JSON file format.
    pub fn to_file(&self, path: &Path, schema_hash: &str) -> Result<()> {
        let file = ModelFile {
            w: self.w.to_vec(),
            b: self.b,
            threshold: self.threshold,
            schema_hash: schema_hash.to_string(),
        };
        let text = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::Io(format!("model serialization: {e}")))?;
        std::fs::write(path, text + "\n")
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
    }

    /// Load from the model JSON file format, checking the schema hash.
    pub fn from_file(path: &Path, expected_schema_hash: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        let file: ModelFile = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid model JSON: {e}")))?;
        if file.schema_hash != expected_schema_hash {
            return Err(Error::Config(format!(
                "model was trained against schema {} but data uses schema {}",
                file.schema_hash, expected_schema_hash
            )));
        }
        if !(file.threshold > 0.0 && file.threshold < 1.0) {
            return Err(Error::Config(format!(
                "model threshold {} outside (0, 1)",
                file.threshold
            )));
        }
        if !file.b.is_finite() || file.w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        Ok(LinearModel {
            w: Array1::from_vec(file.w),
            b: file.b,
            threshold: file.threshold,
        })
    }
}

/// On-disk model format; the schema hash guards against applying a model
/// to differently encoded data.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    w: Vec<f64>,
    b: f64,
    threshold: f64,
    #[serde(rename = "schema-hash")]
    schema_hash: String,
}

fn check_label(y: u8) -> Result<()> {
    if y > 1 {
        return Err(Error::Argument(format!("label must be 0 or 1, got {y}")));
    }
    Ok(())
}

/// Per-class loss weights: inverse class frequency, normalized to mean 1.
pub(crate) fn class_weights(y: &[u8], balance: bool) -> Result<[f64; 2]> {
    let n_pos = y.iter().filter(|&&v| v == 1).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Argument(
            "training data must contain both classes".into(),
        ));
    }
    if balance {
        let n = y.len() as f64;
        Ok([n / (2.0 * n_neg as f64), n / (2.0 * n_pos as f64)])
    } else {
        Ok([1.0, 1.0])
    }
}

/// Weighted mean cross-entropy plus ridge term, with its (w, b) gradient,
/// over the given rows.
pub(crate) fn batch_objective(
    data: &Dataset,
    rows: &[usize],
    weights: [f64; 2],
    l2: f64,
    w: &Array1<f64>,
    b: f64,
) -> (f64, Array1<f64>, f64) {
    let mut loss = 0.0;
    let mut grad_w = Array1::<f64>::zeros(w.len());
    let mut grad_b = 0.0;
    for &i in rows {
        let x = data.row(i);
        let z = w.dot(&x) + b;
        let y = f64::from(data.y[i]);
        let cw = weights[data.y[i] as usize];
        loss += cw * (softplus(z) - y * z);
        let r = cw * (sigmoid(z) - y);
        grad_w.scaled_add(r, &x);
        grad_b += r;
    }
    let inv = 1.0 / rows.len() as f64;
    loss *= inv;
    grad_w *= inv;
    grad_b *= inv;
    loss += 0.5 * l2 * w.dot(w);
    grad_w.scaled_add(l2, w);
    (loss, grad_w, grad_b)
}

/// Baseline empirical-risk training. With a batch size covering the whole
/// dataset this runs monotone backtracking gradient descent for `epochs`
/// iterations; otherwise seeded-shuffle mini-batch descent at a fixed
/// learning rate.
pub fn erm_train(data: &Dataset, config: &TrainConfig) -> Result<LinearModel> {
    config.validate()?;
    let weights = class_weights(&data.y, config.class_balance)?;
    let n = data.n();
    let d = data.d();
    let all_rows: Vec<usize> = (0..n).collect();

    if config.batch_size >= n {
        // Full-batch: pack (w, b) into one parameter vector and descend.
        let init = Array1::<f64>::zeros(d + 1);
        let result = descend(
            init,
            |theta| {
                let w = theta.slice(ndarray::s![..d]).to_owned();
                let b = theta[d];
                let (loss, gw, gb) = batch_objective(data, &all_rows, weights, config.l2, &w, b);
                let mut grad = Array1::<f64>::zeros(d + 1);
                grad.slice_mut(ndarray::s![..d]).assign(&gw);
                grad[d] = gb;
                (loss, grad)
            },
            config.learning_rate,
            config.epochs,
            1e-10,
            40,
        );
        if result.loss_trace.iter().any(|l| !l.is_finite()) {
            return Err(Error::Divergence {
                context: "erm_train full-batch".into(),
            });
        }
        let w = result.params.slice(ndarray::s![..d]).to_owned();
        let b = result.params[d];
        return Ok(LinearModel {
            w,
            b,
            threshold: 0.5,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w = Array1::<f64>::zeros(d);
    let mut b = 0.0;
    let mut order = all_rows.clone();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let (_, gw, gb) = batch_objective(data, batch, weights, config.l2, &w, b);
            w.scaled_add(-config.learning_rate, &gw);
            b -= config.learning_rate * gb;
        }
        let (loss, _, _) = batch_objective(data, &all_rows, weights, config.l2, &w, b);
        if !loss.is_finite() {
            return Err(Error::Divergence {
                context: format!("erm_train epoch {epoch}"),
            });
        }
    }
    Ok(LinearModel {
        w,
        b,
        threshold: 0.5,
    })
}

/// Mean of per-class recalls at the model threshold.
pub fn balanced_accuracy(model: &LinearModel, data: &Dataset) -> Result<f64> {
    let decisions = model.decide_all(data)?;
    balanced_accuracy_of(&decisions, &data.y)
}

/// Balanced accuracy of precomputed decisions.
pub fn balanced_accuracy_of(decisions: &[u8], labels: &[u8]) -> Result<f64> {
    if decisions.len() != labels.len() {
        return Err(Error::Argument(
            "decision and label vectors differ in length".into(),
        ));
    }
    let mut hits = [0usize; 2];
    let mut totals = [0usize; 2];
    for (&d, &y) in decisions.iter().zip(labels) {
        totals[y as usize] += 1;
        if d == y {
            hits[y as usize] += 1;
        }
    }
    if totals[0] == 0 || totals[1] == 0 {
        return Err(Error::Metric(
            "balanced accuracy needs both classes present".into(),
        ));
    }
    Ok(0.5 * (hits[0] as f64 / totals[0] as f64 + hits[1] as f64 / totals[1] as f64))
}
