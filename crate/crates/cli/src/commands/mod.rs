//! Implementations behind the `fairkit` subcommands.

pub mod audit;
pub mod metric;
pub mod reproduce;
pub mod simulate;
pub mod train;

use std::path::Path;

use fairkit::data::{adult_schema, table1_schema, Dataset, FeatureSchema};
use fairkit::{Error, Result};

use crate::manifest::DirLock;

/// Resolve `--schema`: the builtin names `adult` and `table1`, else a path.
pub fn resolve_schema(spec: &str) -> Result<FeatureSchema> {
    match spec {
        "adult" => Ok(adult_schema()),
        "table1" => Ok(table1_schema()),
        path => FeatureSchema::from_json_file(Path::new(path)),
    }
}

/// Raw rows plus the self-standardized encoding models operate on.
pub struct LoadedData {
    pub raw: Dataset,
    pub encoded: Dataset,
}

/// Load a CSV dataset and encode it, standardizing on itself.
pub fn load_encoded(data: &Path, schema: &FeatureSchema) -> Result<LoadedData> {
    let raw = Dataset::load_csv(data, schema)?;
    let encoded = raw.encode_and_standardize(None)?;
    Ok(LoadedData { raw, encoded })
}

/// Create the output's parent directory if needed and lock it.
pub fn lock_output(out: &Path) -> Result<DirLock> {
    let dir = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
    DirLock::acquire(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_schemas_resolve() {
        assert_eq!(resolve_schema("adult").unwrap(), adult_schema());
        assert_eq!(resolve_schema("table1").unwrap(), table1_schema());
    }

    #[test]
    fn unknown_schema_path_is_io_error() {
        let err = resolve_schema("/nonexistent/schema.json").unwrap_err();
        assert!(matches!(err, Error::Io(_)), "{err}");
    }

    #[test]
    fn schema_path_round_trips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        std::fs::write(&path, table1_schema().to_canonical_json()).unwrap();
        let schema = resolve_schema(path.to_str().unwrap()).unwrap();
        assert_eq!(schema, table1_schema());
    }

    #[test]
    fn lock_output_creates_missing_directories() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a/b/out.json");
        let lock = lock_output(&out).unwrap();
        assert!(out.parent().unwrap().is_dir());
        drop(lock);
    }
}
