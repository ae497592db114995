//! In-memory tabular datasets: CSV ingestion, one-hot encoding,
//! standardization, stratified splitting, and fingerprinting.

use crate::data::schema::{ColumnKind, ColumnRole, FeatureSchema};
use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use crate::stats::{mean, sample_std};
use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::Path;

/// Per-column standardization statistics fitted on some reference split.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    /// Column name -> (mean, sample standard deviation).
    pub per_column: BTreeMap<String, (f64, f64)>,
}

/// A fully parsed dataset: encoded features, binary labels, protected-group
/// codes, and row identifiers.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Encoded feature matrix, n x d (one-hot categoricals, raw or
    /// standardized numerics).
    pub x: Array2<f64>,
    /// Binary labels, one per row.
    pub y: Vec<u8>,
    /// Protected-column name -> per-row group codes (category indices).
    pub groups: BTreeMap<String, Vec<u32>>,
    pub schema: FeatureSchema,
    /// Unique row identifiers (row index strings when no identifier column).
    pub ids: Vec<String>,
    /// Present once `encode_and_standardize` has been applied.
    pub standardization: Option<Standardization>,
}

/// Result of a stratified train/test split.
#[derive(Debug, Clone)]
pub struct SplitPair {
    pub train: Dataset,
    pub test: Dataset,
    pub seed: u64,
}

impl Dataset {
    /// Number of rows.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Encoded feature dimension.
    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// One encoded row.
    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.x.row(i)
    }

    /// Group codes for a protected column.
    pub fn group_codes(&self, name: &str) -> Result<&Vec<u32>> {
        self.groups
            .get(name)
            .ok_or_else(|| Error::Argument(format!("unknown protected column '{name}'")))
    }

    /// Category string for a protected column's group code.
    pub fn group_category(&self, name: &str, code: u32) -> Result<&str> {
        let (_, spec) = self
            .schema
            .column(name)
            .ok_or_else(|| Error::Argument(format!("unknown column '{name}'")))?;
        spec.categories
            .get(code as usize)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::Argument(format!("group code {code} out of range for '{name}'")))
    }

    /// Parse a CSV file against a schema. The header must list exactly the
    /// schema's columns in order; fields are whitespace-trimmed; empty fields,
    /// unknown categories, and non-finite numerics are rejected with the
    /// offending 0-based data row and column name.
    pub fn load_csv(path: &Path, schema: &FeatureSchema) -> Result<Dataset> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_csv_str(&text, schema)
    }

    /// Parse CSV text against a schema (see [`Dataset::load_csv`]).
    pub fn from_csv_str(text: &str, schema: &FeatureSchema) -> Result<Dataset> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(false)
            .from_reader(text.as_bytes());

        let headers = reader
            .headers()
            .map_err(|e| Error::Schema(format!("cannot read CSV header: {e}")))?
            .clone();
        let expected: Vec<&str> = schema.columns.iter().map(|c| c.name.as_str()).collect();
        let found: Vec<&str> = headers.iter().collect();
        if found != expected {
            return Err(Error::Schema(format!(
                "CSV header {found:?} does not match schema columns {expected:?}"
            )));
        }

        let (label_idx, _) = schema.label_column();
        let layout = schema.layout();
        let d = schema.encoded_width();
        let mut x_flat: Vec<f64> = Vec::new();
        let mut y: Vec<u8> = Vec::new();
        let mut groups: BTreeMap<String, Vec<u32>> = schema
            .protected_names()
            .into_iter()
            .map(|n| (n, Vec::new()))
            .collect();
        let mut ids: Vec<String> = Vec::new();
        let id_col = schema
            .columns
            .iter()
            .position(|c| c.role == ColumnRole::Identifier);

        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Schema(format!("row {row}: {e}")))?;
            let mut encoded = vec![0.0; d];
            for (ci, spec) in schema.columns.iter().enumerate() {
                let token = record.get(ci).unwrap_or("");
                if token.is_empty() {
                    return Err(Error::Value {
                        row,
                        column: spec.name.clone(),
                        message: "missing value".into(),
                    });
                }
                // Identifier columns are free-form.
                if spec.role == ColumnRole::Identifier {
                    continue;
                }
                match spec.kind {
                    ColumnKind::Numeric => {
                        let v: f64 = token.parse().map_err(|_| Error::Parse {
                            row,
                            column: spec.name.clone(),
                            token: token.to_string(),
                        })?;
                        if !v.is_finite() {
                            return Err(Error::Value {
                                row,
                                column: spec.name.clone(),
                                message: format!("non-finite value '{token}'"),
                            });
                        }
                        if let Some(block) = layout.iter().find(|b| b.column == ci) {
                            encoded[block.offset] = v;
                        }
                    }
                    ColumnKind::Categorical => {
                        let code = spec
                            .categories
                            .iter()
                            .position(|c| c == token)
                            .ok_or_else(|| Error::Value {
                                row,
                                column: spec.name.clone(),
                                message: format!("unknown category '{token}'"),
                            })?;
                        if ci == label_idx {
                            y.push(code as u8);
                        }
                        if spec.is_protected() {
                            groups
                                .get_mut(&spec.name)
                                .expect("protected name registered")
                                .push(code as u32);
                        }
                        if let Some(block) = layout.iter().find(|b| b.column == ci) {
                            encoded[block.offset + code] = 1.0;
                        }
                    }
                }
            }
            ids.push(match id_col {
                Some(ci) => record.get(ci).unwrap_or("").to_string(),
                None => row.to_string(),
            });
            x_flat.extend_from_slice(&encoded);
        }

        let n = ids.len();
        if n == 0 {
            return Err(Error::Schema("CSV contains no data rows".into()));
        }
        {
            let mut seen = std::collections::BTreeSet::new();
            for (i, id) in ids.iter().enumerate() {
                if !seen.insert(id.clone()) {
                    return Err(Error::Value {
                        row: i,
                        column: "identifier".into(),
                        message: format!("duplicate identifier '{id}'"),
                    });
                }
            }
        }
        let x = Array2::from_shape_vec((n, d), x_flat)
            .map_err(|e| Error::Encoding(format!("shape error: {e}")))?;
        Ok(Dataset {
            x,
            y,
            groups,
            schema: schema.clone(),
            ids,
            standardization: None,
        })
    }

    /// Z-score numeric feature columns in place of raw values, fitting
    /// means and sample (n-1) standard deviations on `fit_from` when given
    /// (the train split) and on `self` otherwise. One-hot blocks are left
    /// untouched. Zero-variance numeric columns are rejected.
    pub fn encode_and_standardize(&self, fit_from: Option<&Dataset>) -> Result<Dataset> {
        let reference = fit_from.unwrap_or(self);
        if reference.schema != self.schema {
            return Err(Error::Schema(
                "standardization reference has a different schema".into(),
            ));
        }
        let mut per_column = BTreeMap::new();
        let mut x = self.x.clone();
        for block in self.schema.layout() {
            if block.kind != ColumnKind::Numeric {
                continue;
            }
            let ref_col: Vec<f64> = reference.x.column(block.offset).to_vec();
            let m = mean(&ref_col);
            let s = sample_std(&ref_col);
            if !s.is_finite() || s < 1e-12 {
                return Err(Error::Encoding(format!(
                    "zero-variance numeric column '{}' cannot be standardized",
                    block.name
                )));
            }
            for v in x.column_mut(block.offset).iter_mut() {
                *v = (*v - m) / s;
            }
            per_column.insert(block.name.clone(), (m, s));
        }
        Ok(Dataset {
            x,
            y: self.y.clone(),
            groups: self.groups.clone(),
            schema: self.schema.clone(),
            ids: self.ids.clone(),
            standardization: Some(Standardization { per_column }),
        })
    }

    /// Keep only the given rows (indices must be strictly increasing).
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let d = self.d();
        let mut x = Array2::zeros((indices.len(), d));
        for (k, &i) in indices.iter().enumerate() {
            x.row_mut(k).assign(&self.x.row(i));
        }
        Dataset {
            x,
            y: indices.iter().map(|&i| self.y[i]).collect(),
            groups: self
                .groups
                .iter()
                .map(|(name, codes)| {
                    (name.clone(), indices.iter().map(|&i| codes[i]).collect())
                })
                .collect(),
            schema: self.schema.clone(),
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            standardization: self.standardization.clone(),
        }
    }

    /// Stratified train/test split: per label class, a seeded shuffle sends
    /// `round(test_fraction * class size)` rows to the test side. Row order
    /// within each side follows the original dataset.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<SplitPair> {
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::Argument(format!(
                "test fraction must be in (0, 1), got {test_fraction}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut test_idx: Vec<usize> = Vec::new();
        for class in [0u8, 1u8] {
            let mut members: Vec<usize> = (0..self.n()).filter(|&i| self.y[i] == class).collect();
            members.shuffle(&mut rng);
            let take = ((members.len() as f64) * test_fraction).round() as usize;
            let take = take.min(members.len());
            test_idx.extend_from_slice(&members[..take]);
        }
        test_idx.sort_unstable();
        if test_idx.is_empty() || test_idx.len() == self.n() {
            return Err(Error::Argument(format!(
                "split with fraction {test_fraction} leaves an empty side for n={}",
                self.n()
            )));
        }
        let in_test: Vec<bool> = {
            let mut mask = vec![false; self.n()];
            for &i in &test_idx {
                mask[i] = true;
            }
            mask
        };
        let train_idx: Vec<usize> = (0..self.n()).filter(|&i| !in_test[i]).collect();
        Ok(SplitPair {
            train: self.subset(&train_idx),
            test: self.subset(&test_idx),
            seed,
        })
    }

    /// Render the dataset back to CSV with the schema's column order,
    /// decoding one-hot blocks and group codes to category strings.
    /// Only meaningful for unstandardized datasets.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
        let header: Vec<&str> = self.schema.columns.iter().map(|c| c.name.as_str()).collect();
        writer
            .write_record(&header)
            .map_err(|e| Error::Io(format!("CSV write: {e}")))?;
        let layout = self.schema.layout();
        let (_, label_spec) = self.schema.label_column();
        for i in 0..self.n() {
            let mut record: Vec<String> = Vec::with_capacity(self.schema.columns.len());
            for (ci, spec) in self.schema.columns.iter().enumerate() {
                let cell = match spec.role {
                    ColumnRole::Identifier => self.ids[i].clone(),
                    ColumnRole::Label => label_spec.categories[self.y[i] as usize].clone(),
                    ColumnRole::ProtectedOnly => {
                        let code = self.groups[&spec.name][i] as usize;
                        spec.categories[code].clone()
                    }
                    ColumnRole::Feature => {
                        let block = layout
                            .iter()
                            .find(|b| b.column == ci)
                            .expect("feature column is encoded");
                        match spec.kind {
                            ColumnKind::Numeric => format!("{}", self.x[[i, block.offset]]),
                            ColumnKind::Categorical => {
                                let mut best = 0;
                                let mut best_v = f64::NEG_INFINITY;
                                for k in 0..block.width {
                                    let v = self.x[[i, block.offset + k]];
                                    if v > best_v {
                                        best_v = v;
                                        best = k;
                                    }
                                }
                                spec.categories[best].clone()
                            }
                        }
                    }
                };
                record.push(cell);
            }
            writer
                .write_record(&record)
                .map_err(|e| Error::Io(format!("CSV write: {e}")))?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| Error::Io(format!("CSV flush: {e}")))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(format!("CSV encoding: {e}")))
    }

    /// Write the dataset as CSV (see [`Dataset::to_csv_string`]).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let text = self.to_csv_string()?;
        std::fs::write(path, text)
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
    }

    /// SHA-256 over a canonical byte serialization of the dataset: schema
    /// hash, shape, features, labels, group codes, and identifiers. Equal
    /// fingerprints mean byte-identical datasets.
    pub fn fingerprint(&self) -> String {
        let mut buf: Vec<u8> = Vec::new();
        buf.extend_from_slice(self.schema.hash().as_bytes());
        buf.extend_from_slice(&(self.n() as u64).to_le_bytes());
        buf.extend_from_slice(&(self.d() as u64).to_le_bytes());
        for v in self.x.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(&self.y);
        for (name, codes) in &self.groups {
            buf.extend_from_slice(name.as_bytes());
            buf.push(0);
            for c in codes {
                buf.extend_from_slice(&c.to_le_bytes());
            }
        }
        for id in &self.ids {
            buf.extend_from_slice(id.as_bytes());
            buf.push(0x1f);
        }
        if let Some(std) = &self.standardization {
            for (name, (m, s)) in &std.per_column {
                buf.extend_from_slice(name.as_bytes());
                buf.push(0);
                buf.extend_from_slice(&m.to_le_bytes());
                buf.extend_from_slice(&s.to_le_bytes());
            }
        }
        sha256_hex(&buf)
    }

    /// Mean vector of a list of rows (used for group centroids).
    pub fn mean_rows(&self, indices: &[usize]) -> Array1<f64> {
        let mut acc = Array1::<f64>::zeros(self.d());
        for &i in indices {
            acc += &self.x.row(i);
        }
        if !indices.is_empty() {
            acc /= indices.len() as f64;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::ColumnSpec;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            ColumnSpec {
                name: "income".into(),
                kind: ColumnKind::Numeric,
                categories: vec![],
                protected: false,
                role: ColumnRole::Feature,
            },
            ColumnSpec {
                name: "group".into(),
                kind: ColumnKind::Categorical,
                categories: vec!["a".into(), "b".into()],
                protected: true,
                role: ColumnRole::Feature,
            },
            ColumnSpec {
                name: "approved".into(),
                kind: ColumnKind::Categorical,
                categories: vec!["no".into(), "yes".into()],
                protected: false,
                role: ColumnRole::Label,
            },
        ])
        .unwrap()
    }

    const CSV: &str = "income,group,approved\n1, a ,yes\n2,b,no\n3,a,yes\n";

    #[test]
    fn loads_trimmed_csv() {
        let ds = Dataset::from_csv_str(CSV, &schema()).unwrap();
        assert_eq!(ds.n(), 3);
        assert_eq!(ds.d(), 3); // 1 numeric + 2 one-hot
        assert_eq!(ds.y, vec![1, 0, 1]);
        assert_eq!(ds.groups["group"], vec![0, 1, 0]);
        assert_eq!(ds.x[[0, 1]], 1.0); // one-hot 'a'
        assert_eq!(ds.x[[1, 2]], 1.0); // one-hot 'b'
    }

    #[test]
    fn rejects_unknown_category_with_location() {
        let text = "income,group,approved\n1,purple,yes\n";
        let err = Dataset::from_csv_str(text, &schema()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("row 0"), "{msg}");
        assert!(msg.contains("purple"), "{msg}");
    }

    #[test]
    fn rejects_non_numeric_token() {
        let text = "income,group,approved\nmany,a,yes\n";
        let err = Dataset::from_csv_str(text, &schema()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn rejects_missing_value() {
        let text = "income,group,approved\n1,,yes\n";
        let err = Dataset::from_csv_str(text, &schema()).unwrap_err();
        assert!(err.to_string().contains("missing value"), "{err}");
    }

    #[test]
    fn rejects_header_mismatch() {
        let text = "group,income,approved\na,1,yes\n";
        assert!(Dataset::from_csv_str(text, &schema()).is_err());
    }

    #[test]
    fn standardize_uses_sample_std() {
        let ds = Dataset::from_csv_str(CSV, &schema()).unwrap();
        let std = ds.encode_and_standardize(None).unwrap();
        // column [1,2,3]: mean 2, sample std 1 -> [-1, 0, 1]
        assert!((std.x[[0, 0]] - -1.0).abs() < 1e-12);
        assert!((std.x[[1, 0]] - 0.0).abs() < 1e-12);
        assert!((std.x[[2, 0]] - 1.0).abs() < 1e-12);
        // one-hot untouched
        assert_eq!(std.x[[0, 1]], 1.0);
        let stats = &std.standardization.as_ref().unwrap().per_column;
        assert_eq!(stats["income"], (2.0, 1.0));
    }

    #[test]
    fn standardize_with_train_stats() {
        let ds = Dataset::from_csv_str(CSV, &schema()).unwrap();
        let other = "income,group,approved\n10,a,yes\n20,b,no\n30,a,no\n";
        let other = Dataset::from_csv_str(other, &schema()).unwrap();
        let std = other.encode_and_standardize(Some(&ds)).unwrap();
        // fitted on [1,2,3]: (10-2)/1 = 8
        assert!((std.x[[0, 0]] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_column_rejected() {
        let text = "income,group,approved\n5,a,yes\n5,b,no\n";
        let ds = Dataset::from_csv_str(text, &schema()).unwrap();
        let err = ds.encode_and_standardize(None).unwrap_err();
        assert!(err.to_string().contains("zero-variance"), "{err}");
    }

    #[test]
    fn round_trip_preserves_fingerprint() {
        let ds = Dataset::from_csv_str(CSV, &schema()).unwrap();
        let text = ds.to_csv_string().unwrap();
        let back = Dataset::from_csv_str(&text, &schema()).unwrap();
        assert_eq!(ds.fingerprint(), back.fingerprint());
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let mut rows = String::from("income,group,approved\n");
        for i in 0..40 {
            let label = if i % 4 == 0 { "yes" } else { "no" };
            let g = if i % 2 == 0 { "a" } else { "b" };
            rows.push_str(&format!("{i},{g},{label}\n"));
        }
        let ds = Dataset::from_csv_str(&rows, &schema()).unwrap();
        let pair = ds.split(0.25, 7).unwrap();
        assert_eq!(pair.train.n() + pair.test.n(), 40);
        // 10 positives, fraction 0.25 -> round(2.5) = 3 test positives
        let pos_test = pair.test.y.iter().filter(|&&v| v == 1).count();
        assert_eq!(pos_test, 3);
        let mut ids: Vec<&String> = pair.train.ids.iter().chain(pair.test.ids.iter()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 40);
        // determinism
        let pair2 = ds.split(0.25, 7).unwrap();
        assert_eq!(pair.test.fingerprint(), pair2.test.fingerprint());
    }
}
