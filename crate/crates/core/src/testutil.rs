//! Shared helpers for unit tests.

use crate::data::schema::{ColumnKind, ColumnRole, ColumnSpec, FeatureSchema};
use crate::data::Dataset;
use ndarray::Array2;
use std::collections::BTreeMap;

/// Dataset with d anonymous numeric features and a binary label, no
/// protected columns.
pub(crate) fn dataset_from(x: Array2<f64>, y: Vec<u8>) -> Dataset {
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
        name: "y".into(),
        kind: ColumnKind::Categorical,
        categories: vec!["0".into(), "1".into()],
        protected: false,
        role: ColumnRole::Label,
    });
    let schema = FeatureSchema::new(cols).unwrap();
    let n = x.nrows();
    Dataset {
        x,
        y,
        groups: BTreeMap::new(),
        schema,
        ids: (0..n).map(|i| i.to_string()).collect(),
        standardization: None,
    }
}
