//! Column schemas driving CSV ingestion and one-hot encoding.

use crate::digest::sha256_hex;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

/// Whether a column holds real values or one of a fixed category set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// How a column participates in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnRole {
    /// Encoded into the feature matrix.
    #[default]
    Feature,
    /// The binary outcome being predicted or audited.
    Label,
    /// Kept for auditing only, never encoded into features.
    ProtectedOnly,
    /// Row identifier, never encoded.
    Identifier,
}

/// One column of the raw tabular input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    /// Allowed values for categorical columns; empty for numeric columns.
    #[serde(default)]
    pub categories: Vec<String>,
    /// Marks a protected attribute; such columns are tracked for auditing
    /// whether or not they are also encoded as features.
    #[serde(default)]
    pub protected: bool,
    #[serde(default)]
    pub role: ColumnRole,
}

impl ColumnSpec {
    /// True when this column's group codes must be tracked for audits.
    pub fn is_protected(&self) -> bool {
        self.protected || self.role == ColumnRole::ProtectedOnly
    }

    /// Width of this column in the encoded feature matrix (0 if not encoded).
    pub fn encoded_width(&self) -> usize {
        if self.role != ColumnRole::Feature {
            return 0;
        }
        match self.kind {
            ColumnKind::Numeric => 1,
            ColumnKind::Categorical => self.categories.len(),
        }
    }
}

/// Position of one schema column inside the encoded feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedBlock {
    /// Index into `FeatureSchema::columns`.
    pub column: usize,
    pub name: String,
    pub kind: ColumnKind,
    /// First encoded column of this block.
    pub offset: usize,
    /// Number of encoded columns (1 for numeric, |categories| for categorical).
    pub width: usize,
}

/// Ordered column schema for one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureSchema {
    pub columns: Vec<ColumnSpec>,
}

impl FeatureSchema {
    /// Build and validate a schema.
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let schema = FeatureSchema { columns };
        schema.validate()?;
        Ok(schema)
    }

    /// Read a schema from a JSON file; unknown keys are rejected.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read schema {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Parse a schema from JSON text; unknown keys are rejected.
    pub fn from_json(text: &str) -> Result<Self> {
        let schema: FeatureSchema = serde_json::from_str(text)
            .map_err(|e| Error::Schema(format!("invalid schema JSON: {e}")))?;
        schema.validate()?;
        Ok(schema)
    }

    /// Canonical JSON form used for hashing and byte-stable output.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    /// SHA-256 of the canonical JSON; guards models against schema drift.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_canonical_json().as_bytes())
    }

    fn validate(&self) -> Result<()> {
        if self.columns.is_empty() {
            return Err(Error::Schema("schema has no columns".into()));
        }
        let mut names = BTreeSet::new();
        for c in &self.columns {
            if !names.insert(c.name.clone()) {
                return Err(Error::Schema(format!("duplicate column name '{}'", c.name)));
            }
            match (c.kind, c.role) {
                (_, ColumnRole::Identifier) => {
                    // free-form; kind and categories are ignored
                }
                (ColumnKind::Categorical, _) => {
                    if c.categories.is_empty() {
                        return Err(Error::Schema(format!(
                            "categorical column '{}' has no categories",
                            c.name
                        )));
                    }
                    let distinct: BTreeSet<&String> = c.categories.iter().collect();
                    if distinct.len() != c.categories.len() {
                        return Err(Error::Schema(format!(
                            "categorical column '{}' has duplicate categories",
                            c.name
                        )));
                    }
                }
                (ColumnKind::Numeric, _) => {
                    if !c.categories.is_empty() {
                        return Err(Error::Schema(format!(
                            "numeric column '{}' must not list categories",
                            c.name
                        )));
                    }
                }
            }
            if c.is_protected() {
                match c.role {
                    ColumnRole::Feature | ColumnRole::ProtectedOnly => {
                        if c.kind != ColumnKind::Categorical {
                            return Err(Error::Schema(format!(
                                "protected column '{}' must be categorical",
                                c.name
                            )));
                        }
                    }
                    _ => {
                        return Err(Error::Schema(format!(
                            "column '{}' with role {:?} cannot be protected",
                            c.name, c.role
                        )));
                    }
                }
            }
        }
        let labels: Vec<&ColumnSpec> = self
            .columns
            .iter()
            .filter(|c| c.role == ColumnRole::Label)
            .collect();
        if labels.len() != 1 {
            return Err(Error::Schema(format!(
                "schema must have exactly one label column, found {}",
                labels.len()
            )));
        }
        let label = labels[0];
        if label.kind != ColumnKind::Categorical || label.categories.len() != 2 {
            return Err(Error::Schema(format!(
                "label column '{}' must be categorical with exactly 2 categories",
                label.name
            )));
        }
        Ok(())
    }

    /// The label column and its schema index.
    pub fn label_column(&self) -> (usize, &ColumnSpec) {
        self.columns
            .iter()
            .enumerate()
            .find(|(_, c)| c.role == ColumnRole::Label)
            .expect("validated schema has a label")
    }

    /// Names of all protected columns, in schema order.
    pub fn protected_names(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| c.is_protected())
            .map(|c| c.name.clone())
            .collect()
    }

    /// Look up a column by name.
    pub fn column(&self, name: &str) -> Option<(usize, &ColumnSpec)> {
        self.columns
            .iter()
            .enumerate()
            .find(|(_, c)| c.name == name)
    }

    /// Encoded feature-matrix layout: one block per feature column, so every
    /// encoded column index maps back to exactly one schema column.
    pub fn layout(&self) -> Vec<EncodedBlock> {
        let mut blocks = Vec::new();
        let mut offset = 0;
        for (i, c) in self.columns.iter().enumerate() {
            let width = c.encoded_width();
            if width > 0 {
                blocks.push(EncodedBlock {
                    column: i,
                    name: c.name.clone(),
                    kind: c.kind,
                    offset,
                    width,
                });
                offset += width;
            }
        }
        blocks
    }

    /// Total encoded width (numeric columns contribute 1, categorical
    /// columns contribute their category count).
    pub fn encoded_width(&self) -> usize {
        self.columns.iter().map(|c| c.encoded_width()).sum()
    }

    /// The block for a named feature column, if it is encoded.
    pub fn block_of(&self, name: &str) -> Option<EncodedBlock> {
        self.layout().into_iter().find(|b| b.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_feature_schema() -> FeatureSchema {
        FeatureSchema::new(vec![
            ColumnSpec {
                name: "amount".into(),
                kind: ColumnKind::Numeric,
                categories: vec![],
                protected: false,
                role: ColumnRole::Feature,
            },
            ColumnSpec {
                name: "color".into(),
                kind: ColumnKind::Categorical,
                categories: vec!["red".into(), "blue".into()],
                protected: false,
                role: ColumnRole::Feature,
            },
            ColumnSpec {
                name: "outcome".into(),
                kind: ColumnKind::Categorical,
                categories: vec!["no".into(), "yes".into()],
                protected: false,
                role: ColumnRole::Label,
            },
        ])
        .unwrap()
    }

    #[test]
    fn encoded_width_sums_blocks() {
        let s = two_feature_schema();
        assert_eq!(s.encoded_width(), 3); // 1 numeric + 2 categories
        let layout = s.layout();
        assert_eq!(layout.len(), 2);
        assert_eq!(layout[1].offset, 1);
        assert_eq!(layout[1].width, 2);
    }

    #[test]
    fn rejects_missing_label() {
        let err = FeatureSchema::new(vec![ColumnSpec {
            name: "x".into(),
            kind: ColumnKind::Numeric,
            categories: vec![],
            protected: false,
            role: ColumnRole::Feature,
        }])
        .unwrap_err();
        assert!(err.to_string().contains("label"));
    }

    #[test]
    fn rejects_duplicate_categories() {
        let err = FeatureSchema::new(vec![
            ColumnSpec {
                name: "c".into(),
                kind: ColumnKind::Categorical,
                categories: vec!["a".into(), "a".into()],
                protected: false,
                role: ColumnRole::Feature,
            },
            ColumnSpec {
                name: "y".into(),
                kind: ColumnKind::Categorical,
                categories: vec!["0".into(), "1".into()],
                protected: false,
                role: ColumnRole::Label,
            },
        ])
        .unwrap_err();
        assert!(err.to_string().contains("duplicate categories"));
    }

    #[test]
    fn rejects_unknown_json_keys() {
        let text = r#"{"columns": [], "extra": 1}"#;
        assert!(FeatureSchema::from_json(text).is_err());
    }

    #[test]
    fn json_round_trip_preserves_hash() {
        let s = two_feature_schema();
        let json = s.to_canonical_json();
        let back = FeatureSchema::from_json(&json).unwrap();
        assert_eq!(s.hash(), back.hash());
    }
}
