//! Sensitive-direction fitting: ridge-logistic predictors of protected
//! attributes plus one-hot indicator vectors, deduplicated and tagged.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{descend, sigmoid, softplus};
use ndarray::Array1;

/// Where a sensitive direction came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionKind {
    /// Coefficients of a ridge-logistic predictor of the protected attribute.
    FittedPredictor,
    /// A one-hot basis vector of a protected attribute encoded in X.
    ProtectedIndicator,
}

impl DirectionKind {
    /// Kebab-case tag used in provenance strings.
    pub fn tag(&self) -> &'static str {
        match self {
            DirectionKind::FittedPredictor => "fitted-predictor",
            DirectionKind::ProtectedIndicator => "protected-indicator",
        }
    }
}

/// Provenance record for one sensitive direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSource {
    pub kind: DirectionKind,
    /// Protected column the direction was derived from.
    pub column: String,
    /// True when the fitted predictor performed near chance on held-out
    /// rows, meaning the attribute is barely recoverable from X.
    pub low_signal: bool,
    /// Held-out balanced accuracy of the fitted predictor, when measurable.
    pub holdout_balanced_accuracy: Option<f64>,
}

/// Unit vectors spanning the sensitive subspace, with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitiveDirections {
    pub v: Vec<Array1<f64>>,
    pub source: Vec<DirectionSource>,
}

impl SensitiveDirections {
    /// "kind:column" tags, one per direction.
    pub fn provenance_tags(&self) -> Vec<String> {
        self.source
            .iter()
            .map(|s| format!("{}:{}", s.kind.tag(), s.column))
            .collect()
    }

    /// Number of directions.
    pub fn k(&self) -> usize {
        self.v.len()
    }
}

const RIDGE: f64 = 1e-2;
const MAX_ITER: usize = 5_000;
const GRAD_TOL: f64 = 1e-7;
/// Held-out balanced accuracy below this flags a low-signal direction.
const LOW_SIGNAL_BA: f64 = 0.55;

/// Ridge-logistic fit of a binary target over selected rows; returns (w, b).
fn ridge_logistic(
    data: &Dataset,
    rows: &[usize],
    target: &[u8],
) -> Result<(Array1<f64>, f64)> {
    let d = data.d();
    let init = Array1::<f64>::zeros(d + 1);
    let result = descend(
        init,
        |theta| {
            let w = theta.slice(ndarray::s![..d]);
            let b = theta[d];
            let mut loss = 0.0;
            let mut grad = Array1::<f64>::zeros(d + 1);
            for &i in rows {
                let x = data.row(i);
                let z = w.dot(&x) + b;
                let y = f64::from(target[i]);
                loss += softplus(z) - y * z;
                let r = sigmoid(z) - y;
                grad.slice_mut(ndarray::s![..d]).scaled_add(r, &x);
                grad[d] += r;
            }
            let inv = 1.0 / rows.len() as f64;
            loss *= inv;
            grad *= inv;
            let wo = w.to_owned();
            loss += 0.5 * RIDGE * wo.dot(&wo);
            grad.slice_mut(ndarray::s![..d]).scaled_add(RIDGE, &wo);
            (loss, grad)
        },
        1.0,
        MAX_ITER,
        GRAD_TOL,
        40,
    );
    if result.grad_norm > GRAD_TOL {
        return Err(Error::Convergence {
            iterations: result.iterations,
            grad_norm: result.grad_norm,
            tolerance: GRAD_TOL,
        });
    }
    let w = result.params.slice(ndarray::s![..d]).to_owned();
    let b = result.params[d];
    Ok((w, b))
}

/// Balanced accuracy of the predictor sigmoid(w'x + b) >= 0.5 against the
/// target over the given rows; None when a class is absent.
fn holdout_ba(
    data: &Dataset,
    rows: &[usize],
    target: &[u8],
    w: &Array1<f64>,
    b: f64,
) -> Option<f64> {
    let mut hits = [0usize; 2];
    let mut totals = [0usize; 2];
    for &i in rows {
        let t = target[i] as usize;
        totals[t] += 1;
        let pred = u8::from(sigmoid(w.dot(&data.row(i)) + b) >= 0.5);
        if pred == target[i] {
            hits[t] += 1;
        }
    }
    if totals[0] == 0 || totals[1] == 0 {
        return None;
    }
    Some(0.5 * (hits[0] as f64 / totals[0] as f64 + hits[1] as f64 / totals[1] as f64))
}

/// Fit unit sensitive directions for each named protected column: the
/// normalized coefficients of a ridge-logistic predictor of the attribute
/// (one predictor for binary attributes, one-vs-rest for more categories),
/// plus one-hot indicator vectors when the attribute is encoded in X and
/// `include_indicators` is set. Near-duplicates (|cosine| > 0.999) are
/// dropped. Every fourth row is held out to score predictor signal.
pub fn fit_sensitive_directions(
    data: &Dataset,
    protected_names: &[String],
    include_indicators: bool,
) -> Result<SensitiveDirections> {
    let d = data.d();
    let mut v: Vec<Array1<f64>> = Vec::new();
    let mut source: Vec<DirectionSource> = Vec::new();
    let push_unique = |vec: Array1<f64>, src: DirectionSource,
                           v: &mut Vec<Array1<f64>>,
                           source: &mut Vec<DirectionSource>| {
        let dup = v.iter().any(|kept| kept.dot(&vec).abs() > 0.999);
        if !dup {
            v.push(vec);
            source.push(src);
        }
    };

    let train_rows: Vec<usize> = (0..data.n()).filter(|i| i % 4 != 0).collect();
    let holdout_rows: Vec<usize> = (0..data.n()).filter(|i| i % 4 == 0).collect();

    for name in protected_names {
        let codes = data.group_codes(name)?;
        let mut observed: Vec<u32> = codes.to_vec();
        observed.sort_unstable();
        observed.dedup();
        if observed.len() < 2 {
            return Err(Error::DegenerateAttribute(name.clone()));
        }
        // Binary attributes need one predictor; larger ones one per category.
        let targets: Vec<u32> = if observed.len() == 2 {
            vec![observed[1]]
        } else {
            observed.clone()
        };
        for target_code in targets {
            let target: Vec<u8> = codes.iter().map(|&c| u8::from(c == target_code)).collect();
            let (w, b) = ridge_logistic(data, &train_rows, &target)?;
            let norm = w.dot(&w).sqrt();
            if norm < 1e-12 {
                // perfectly uninformative fit; nothing to add
                continue;
            }
            let ba = holdout_ba(data, &holdout_rows, &target, &w, b);
            let low_signal = ba.map(|v| v < LOW_SIGNAL_BA).unwrap_or(false);
            push_unique(
                w / norm,
                DirectionSource {
                    kind: DirectionKind::FittedPredictor,
                    column: name.clone(),
                    low_signal,
                    holdout_balanced_accuracy: ba,
                },
                &mut v,
                &mut source,
            );
        }
    }

    if include_indicators {
        for name in protected_names {
            if let Some(block) = data.schema.block_of(name) {
                for k in 0..block.width {
                    let mut e = Array1::<f64>::zeros(d);
                    e[block.offset + k] = 1.0;
                    push_unique(
                        e,
                        DirectionSource {
                            kind: DirectionKind::ProtectedIndicator,
                            column: name.clone(),
                            low_signal: false,
                            holdout_balanced_accuracy: None,
                        },
                        &mut v,
                        &mut source,
                    );
                }
            }
        }
    }

    Ok(SensitiveDirections { v, source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::{ColumnKind, ColumnRole, ColumnSpec, FeatureSchema};
    use ndarray::Array2;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    /// d numeric features, one protected-only binary column, binary label.
    fn dataset(x: Array2<f64>, y: Vec<u8>, codes: Vec<u32>) -> Dataset {
        let d = x.ncols();
        let mut cols: Vec<ColumnSpec> = (0..d)
            .map(|i| ColumnSpec {
                name: format!("f{i}"),
                kind: ColumnKind::Numeric,
                categories: vec![],
                protected: false,
                role: ColumnRole::Feature,
            })
            .collect();
        cols.push(ColumnSpec {
            name: "g".into(),
            kind: ColumnKind::Categorical,
            categories: vec!["a".into(), "b".into()],
            protected: true,
            role: ColumnRole::ProtectedOnly,
        });
        cols.push(ColumnSpec {
            name: "y".into(),
            kind: ColumnKind::Categorical,
            categories: vec!["0".into(), "1".into()],
            protected: false,
            role: ColumnRole::Label,
        });
        let schema = FeatureSchema::new(cols).unwrap();
        let n = x.nrows();
        let mut groups = BTreeMap::new();
        groups.insert("g".to_string(), codes);
        Dataset {
            x,
            y,
            groups,
            schema,
            ids: (0..n).map(|i| i.to_string()).collect(),
            standardization: None,
        }
    }

    #[test]
    fn perfectly_predictive_column_dominates_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 400;
        let mut x = Array2::<f64>::zeros((n, 3));
        let mut codes = Vec::new();
        for i in 0..n {
            let g = u32::from(rng.random::<f64>() < 0.5);
            codes.push(g);
            x[[i, 0]] = f64::from(g);
            x[[i, 1]] = rng.random::<f64>() - 0.5;
            x[[i, 2]] = rng.random::<f64>() - 0.5;
        }
        let y = vec![0u8; n / 2].into_iter().chain(vec![1u8; n / 2]).collect();
        let ds = dataset(x, y, codes);
        let dirs = fit_sensitive_directions(&ds, &["g".to_string()], false).unwrap();
        assert_eq!(dirs.k(), 1);
        let cos = dirs.v[0][0].abs();
        assert!(cos >= 0.99, "cosine with e_0 was {cos}");
        assert!(!dirs.source[0].low_signal);
        assert!(dirs.source[0].holdout_balanced_accuracy.unwrap() > 0.95);
    }

    #[test]
    fn independent_attribute_is_flagged_low_signal() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let n = 2_000;
        let mut x = Array2::<f64>::zeros((n, 4));
        let mut codes = Vec::new();
        for i in 0..n {
            codes.push(u32::from(rng.random::<f64>() < 0.5));
            for j in 0..4 {
                x[[i, j]] = rng.random::<f64>() * 2.0 - 1.0;
            }
        }
        let y = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        let ds = dataset(x, y, codes);
        let dirs = fit_sensitive_directions(&ds, &["g".to_string()], false).unwrap();
        assert_eq!(dirs.k(), 1);
        let ba = dirs.source[0].holdout_balanced_accuracy.unwrap();
        assert!((ba - 0.5).abs() < 0.05, "holdout BA {ba}");
        assert!(dirs.source[0].low_signal);
    }

    #[test]
    fn constant_attribute_is_degenerate() {
        let x = Array2::<f64>::zeros((8, 2));
        let y = (0..8).map(|i| u8::from(i % 2 == 0)).collect();
        let ds = dataset(x, y, vec![1; 8]);
        let err = fit_sensitive_directions(&ds, &["g".to_string()], false).unwrap_err();
        assert!(matches!(err, Error::DegenerateAttribute(_)), "{err}");
    }

    #[test]
    fn indicators_appended_for_encoded_protected_feature() {
        // schema: 1 numeric + protected one-hot (2 cats) + label
        let cols = vec![
            ColumnSpec {
                name: "f0".into(),
                kind: ColumnKind::Numeric,
                categories: vec![],
                protected: false,
                role: ColumnRole::Feature,
            },
            ColumnSpec {
                name: "g".into(),
                kind: ColumnKind::Categorical,
                categories: vec!["a".into(), "b".into()],
                protected: true,
                role: ColumnRole::Feature,
            },
            ColumnSpec {
                name: "y".into(),
                kind: ColumnKind::Categorical,
                categories: vec!["0".into(), "1".into()],
                protected: false,
                role: ColumnRole::Label,
            },
        ];
        let schema = FeatureSchema::new(cols).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let n = 200;
        let mut x = Array2::<f64>::zeros((n, 3));
        let mut codes = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let g = u32::from(rng.random::<f64>() < 0.5);
            codes.push(g);
            x[[i, 0]] = rng.random::<f64>() - 0.5;
            x[[i, 1 + g as usize]] = 1.0;
            y.push(u8::from(i % 2 == 0));
        }
        let mut groups = BTreeMap::new();
        groups.insert("g".to_string(), codes);
        let ds = Dataset {
            x,
            y,
            groups,
            schema,
            ids: (0..n).map(|i| i.to_string()).collect(),
            standardization: None,
        };
        let dirs = fit_sensitive_directions(&ds, &["g".to_string()], true).unwrap();
        // one fitted predictor + two indicators
        assert_eq!(dirs.k(), 3);
        let indicator_count = dirs
            .source
            .iter()
            .filter(|s| s.kind == DirectionKind::ProtectedIndicator)
            .count();
        assert_eq!(indicator_count, 2);
        for (vec, src) in dirs.v.iter().zip(&dirs.source) {
            if src.kind == DirectionKind::ProtectedIndicator {
                assert_eq!(vec.iter().filter(|&&t| t != 0.0).count(), 1);
            }
            let norm = vec.dot(vec).sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn duplicate_listings_are_deduplicated() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let n = 300;
        let mut x = Array2::<f64>::zeros((n, 3));
        let mut codes = Vec::new();
        for i in 0..n {
            let g = u32::from(i % 2 == 0);
            codes.push(g);
            x[[i, 0]] = f64::from(g) + 0.05 * rng.random::<f64>();
            x[[i, 1]] = rng.random::<f64>();
            x[[i, 2]] = rng.random::<f64>();
        }
        let y = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
        let ds = dataset(x, y, codes);
        let twice = vec!["g".to_string(), "g".to_string()];
        let dirs = fit_sensitive_directions(&ds, &twice, false).unwrap();
        assert_eq!(dirs.k(), 1, "identical fits must deduplicate");
    }
}
