//! Fair metrics: quadratic-form distances, sensitive-subspace projection
//! complements, and pair-logistic metric learning.

pub mod explore;
pub mod subspace;

pub use explore::{explore_fit, make_pairs, ExploreConfig, ExploreResult, PairSet};
pub use subspace::{fit_sensitive_directions, DirectionSource, DirectionKind, SensitiveDirections};

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, symmetric_eigenvalues};
use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// How a fair metric was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    /// Sigma = I - P_V for a sensitive subspace span(V); idempotent.
    ProjectionComplement,
    /// Sigma = L L' learned from comparable/incomparable pairs.
    Learned,
}

/// A positive semi-definite quadratic-form distance on encoded features.
///
/// The distance is the quadratic form itself (no square root), so it is a
/// squared-distance-like dissimilarity rather than a triangle-inequality
/// metric; it is used exactly in that form throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct FairMetric {
    pub sigma: Array2<f64>,
    pub kind: MetricKind,
    /// Human-readable tags recording what the metric was built from.
    pub provenance: Vec<String>,
}

impl FairMetric {
    /// Feature dimension the metric applies to.
    pub fn d(&self) -> usize {
        self.sigma.nrows()
    }

    /// Identity metric (plain squared Euclidean distance).
    pub fn identity(d: usize) -> Self {
        FairMetric {
            sigma: Array2::eye(d),
            kind: MetricKind::Learned,
            provenance: vec!["identity".into()],
        }
    }

    /// Check symmetry (1e-10), positive semi-definiteness (eigenvalues
    /// >= -1e-8), and idempotence for projection complements (1e-8).
    pub fn validate(&self) -> Result<()> {
        let s = &self.sigma;
        if s.nrows() != s.ncols() {
            return Err(Error::Metric(format!(
                "sigma must be square, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        let mut asym = 0.0f64;
        for i in 0..s.nrows() {
            for j in 0..i {
                asym = asym.max((s[[i, j]] - s[[j, i]]).abs());
            }
        }
        if asym > 1e-10 {
            return Err(Error::Metric(format!(
                "sigma asymmetry {asym:.3e} exceeds 1e-10"
            )));
        }
        let eigs = symmetric_eigenvalues(s);
        if let Some(min) = eigs.iter().cloned().reduce(f64::min) {
            if min < -1e-8 {
                return Err(Error::Metric(format!(
                    "sigma has negative eigenvalue {min:.3e}"
                )));
            }
        }
        if self.kind == MetricKind::ProjectionComplement {
            let sq = s.dot(s);
            let mut dev = 0.0f64;
            for (a, b) in sq.iter().zip(s.iter()) {
                dev = dev.max((a - b).abs());
            }
            if dev > 1e-8 {
                return Err(Error::Metric(format!(
                    "projection complement not idempotent: |sigma^2 - sigma| = {dev:.3e}"
                )));
            }
        }
        Ok(())
    }

    /// Serialize to the metric JSON file format.
    pub fn to_file(&self, path: &Path) -> Result<()> {
        let file = MetricFile {
            kind: self.kind,
            d: self.d(),
            sigma: self.sigma.iter().cloned().collect(),
            provenance: self.provenance.clone(),
        };
        let text = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::Io(format!("metric serialization: {e}")))?;
        std::fs::write(path, text + "\n")
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
    }

    /// Load and validate a metric from the JSON file format.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        let file: MetricFile = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid metric JSON: {e}")))?;
        if file.sigma.len() != file.d * file.d {
            return Err(Error::Config(format!(
                "metric sigma has {} entries, expected {}x{}",
                file.sigma.len(),
                file.d,
                file.d
            )));
        }
        let sigma = Array2::from_shape_vec((file.d, file.d), file.sigma)
            .map_err(|e| Error::Config(format!("metric shape: {e}")))?;
        let metric = FairMetric {
            sigma,
            kind: file.kind,
            provenance: file.provenance,
        };
        metric.validate()?;
        Ok(metric)
    }
}

/// On-disk metric format: row-major sigma plus provenance tags.
#[derive(Serialize, Deserialize)]
struct MetricFile {
    kind: MetricKind,
    d: usize,
    sigma: Vec<f64>,
    provenance: Vec<String>,
}

/// Fair squared distance (x1 - x2)' Sigma (x1 - x2), clamped at zero.
pub fn fair_distance(
    metric: &FairMetric,
    x1: &ArrayView1<'_, f64>,
    x2: &ArrayView1<'_, f64>,
) -> Result<f64> {
    let d = metric.d();
    if x1.len() != d || x2.len() != d {
        return Err(Error::Argument(format!(
            "fair_distance dimensions ({}, {}) do not match metric dimension {d}",
            x1.len(),
            x2.len()
        )));
    }
    let diff = x1.to_owned() - x2;
    let v = diff.dot(&metric.sigma.dot(&diff));
    if v < -1e-10 {
        return Err(Error::Metric(format!(
            "metric produced negative distance {v:.3e}"
        )));
    }
    Ok(v.max(0.0))
}

/// Sigma = I - P_V for the span of the given directions; an empty set
/// yields the identity.
pub fn projection_complement(directions: &SensitiveDirections, d: usize) -> Result<FairMetric> {
    for v in &directions.v {
        if v.len() != d {
            return Err(Error::Argument(format!(
                "direction dimension {} does not match requested dimension {d}",
                v.len()
            )));
        }
    }
    let basis = orthonormalize(&directions.v, 1e-10);
    let mut sigma = Array2::<f64>::eye(d);
    for b in &basis {
        let outer = outer_product(b);
        sigma -= &outer;
    }
    // enforce exact symmetry against accumulated rounding
    let sigma = symmetrize(sigma);
    let metric = FairMetric {
        sigma,
        kind: MetricKind::ProjectionComplement,
        provenance: directions.provenance_tags(),
    };
    metric.validate()?;
    Ok(metric)
}

fn outer_product(v: &Array1<f64>) -> Array2<f64> {
    let d = v.len();
    let mut m = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            m[[i, j]] = v[i] * v[j];
        }
    }
    m
}

fn symmetrize(m: Array2<f64>) -> Array2<f64> {
    let mut out = m.clone();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[[i, j]] = 0.5 * (m[[i, j]] + m[[j, i]]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::subspace::{DirectionKind, DirectionSource};
    use super::*;
    use ndarray::array;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn directions_from(vs: Vec<Array1<f64>>) -> SensitiveDirections {
        let source = vs
            .iter()
            .map(|_| DirectionSource {
                kind: DirectionKind::ProtectedIndicator,
                column: "g".into(),
                low_signal: false,
                holdout_balanced_accuracy: None,
            })
            .collect();
        SensitiveDirections { v: vs, source }
    }

    #[test]
    fn empty_directions_give_identity() {
        let m = projection_complement(&directions_from(vec![]), 3).unwrap();
        assert_eq!(m.sigma, Array2::<f64>::eye(3));
    }

    #[test]
    fn axis_direction_gives_diagonal_complement() {
        let m = projection_complement(&directions_from(vec![array![1.0, 0.0]]), 2).unwrap();
        assert!((m.sigma[[0, 0]] - 0.0).abs() < 1e-12);
        assert!((m.sigma[[1, 1]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_complement_hand_example() {
        let v = array![1.0, 1.0] / 2.0f64.sqrt();
        let m = projection_complement(&directions_from(vec![v]), 2).unwrap();
        let expect = [[0.5, -0.5], [-0.5, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.sigma[[i, j]] - expect[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn distance_examples() {
        let sigma = Array2::from_diag(&array![0.0, 1.0]);
        let m = FairMetric {
            sigma,
            kind: MetricKind::Learned,
            provenance: vec![],
        };
        let a = array![5.0, 1.0];
        let b = array![0.0, 1.0];
        assert_eq!(fair_distance(&m, &a.view(), &b.view()).unwrap(), 0.0);
        let c = array![0.0, 3.0];
        let d = array![0.0, 1.0];
        assert_eq!(fair_distance(&m, &c.view(), &d.view()).unwrap(), 4.0);
        // symmetry in arguments
        let ab = fair_distance(&m, &a.view(), &c.view()).unwrap();
        let ba = fair_distance(&m, &c.view(), &a.view()).unwrap();
        assert!((ab - ba).abs() <= 1e-12);
        // same point
        assert_eq!(fair_distance(&m, &a.view(), &a.view()).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_argument_error() {
        let m = FairMetric::identity(2);
        let a = array![1.0];
        let b = array![0.0, 0.0];
        assert!(fair_distance(&m, &a.view(), &b.view()).is_err());
    }

    #[test]
    fn random_projection_complements_satisfy_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let d = 2 + rng.random_range(0..49usize);
            let k = 1 + rng.random_range(0..10usize.min(d));
            let vs: Vec<Array1<f64>> = (0..k)
                .map(|_| {
                    let mut v =
                        Array1::from_iter((0..d).map(|_| rng.random::<f64>() * 2.0 - 1.0));
                    let norm = v.dot(&v).sqrt();
                    if norm > 0.0 {
                        v /= norm;
                    }
                    v
                })
                .collect();
            let m = projection_complement(&directions_from(vs.clone()), d).unwrap();
            // symmetry
            for i in 0..d {
                for j in 0..d {
                    assert!((m.sigma[[i, j]] - m.sigma[[j, i]]).abs() <= 1e-10);
                }
            }
            // idempotence
            let sq = m.sigma.dot(&m.sigma);
            for (a, b) in sq.iter().zip(m.sigma.iter()) {
                assert!((a - b).abs() <= 1e-8);
            }
            // annihilation
            for v in &vs {
                let img = m.sigma.dot(v);
                assert!(img.dot(&img).sqrt() <= 1e-8);
            }
            // translation invariance along span(V)
            let x1 = Array1::from_iter((0..d).map(|_| rng.random::<f64>()));
            let x2 = Array1::from_iter((0..d).map(|_| rng.random::<f64>()));
            let base = fair_distance(&m, &x1.view(), &x2.view()).unwrap();
            let alpha = rng.random::<f64>() * 4.0 - 2.0;
            let shifted = &x1 + &vs[0].mapv(|t| alpha * t);
            let moved = fair_distance(&m, &shifted.view(), &x2.view()).unwrap();
            assert!((base - moved).abs() <= 1e-8, "d{d} base {base} moved {moved}");
        }
    }

    #[test]
    fn metric_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metric.json");
        let v = array![1.0, 1.0] / 2.0f64.sqrt();
        let m = projection_complement(&directions_from(vec![v]), 2).unwrap();
        m.to_file(&path).unwrap();
        let back = FairMetric::from_file(&path).unwrap();
        assert_eq!(m.sigma, back.sigma);
        assert_eq!(m.kind, back.kind);
    }
}
