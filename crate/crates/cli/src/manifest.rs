//! Run manifests: the audit trail tying every output to its invocation.
//!
//! Each run writes a manifest sidecar `<output>.manifest.json` next to its
//! primary output, and JSON outputs embed the manifest digest under a
//! `manifest` key. The digest covers the manifest's canonical JSON, which
//! lists output paths rather than output digests, so the cross-reference
//! has no cycle. Manifests carry no timestamps: a rerun with identical
//! inputs and seeds produces byte-identical files.

use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use fairkit::digest::sha256_hex;
use fairkit::{Error, Result};
use serde::{Deserialize, Serialize};

/// Everything needed to re-run a command and account for its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Exact argv of the invocation.
    pub command_line: Vec<String>,
    /// Digest of the effective run configuration.
    pub config_digest: String,
    /// Fingerprint of each dataset the run consumed or generated, in order.
    pub dataset_fingerprints: Vec<String>,
    /// Seeds the run consumed.
    pub seeds: Vec<u64>,
    pub toolkit_version: String,
    /// Files the run wrote, as given on the command line.
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// Manifest for the current process invocation.
    pub fn new(
        config_digest: String,
        dataset_fingerprints: Vec<String>,
        seeds: Vec<u64>,
        outputs: Vec<String>,
    ) -> RunManifest {
        RunManifest {
            command_line: std::env::args().collect(),
            config_digest,
            dataset_fingerprints,
            seeds,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs,
        }
    }

    /// Digest that outputs embed to reference this manifest.
    pub fn digest(&self) -> String {
        let text = serde_json::to_string(self).expect("manifest serializes");
        sha256_hex(text.as_bytes())
    }

    /// Write the sidecar next to the primary output and return its path.
    pub fn write_sidecar(&self, primary_out: &Path) -> Result<PathBuf> {
        let path = sidecar_path(primary_out);
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Io(format!("manifest serialization: {e}")))?;
        std::fs::write(&path, text + "\n")
            .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

/// Manifest path convention: `<output>.manifest.json`.
pub fn sidecar_path(primary_out: &Path) -> PathBuf {
    PathBuf::from(format!("{}.manifest.json", primary_out.display()))
}

/// Serialize a report to JSON with the manifest digest embedded.
pub fn write_json_with_manifest<T: Serialize>(
    path: &Path,
    value: &T,
    manifest_digest: &str,
) -> Result<()> {
    let mut v = serde_json::to_value(value)
        .map_err(|e| Error::Io(format!("report serialization: {e}")))?;
    insert_digest(&mut v, manifest_digest)?;
    write_value(path, &v)
}

/// Add the manifest digest to a JSON file written by the core crate.
pub fn inject_manifest(path: &Path, manifest_digest: &str) -> Result<()> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Io(format!("invalid JSON in {}: {e}", path.display())))?;
    insert_digest(&mut v, manifest_digest)?;
    write_value(path, &v)
}

fn insert_digest(v: &mut serde_json::Value, digest: &str) -> Result<()> {
    match v {
        serde_json::Value::Object(map) => {
            map.insert("manifest".to_string(), digest.into());
            Ok(())
        }
        _ => Err(Error::Io("output JSON is not an object".into())),
    }
}

fn write_value(path: &Path, v: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)
        .map_err(|e| Error::Io(format!("output serialization: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}

/// Exclusive lock on an output directory, released when dropped.
#[derive(Debug)]
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    /// Take the lock, failing when another run already holds it.
    pub fn acquire(dir: &Path) -> Result<DirLock> {
        let path = dir.join(".fairkit.lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Io(format!(
                "another run is writing to {}; remove {} if it is stale",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(Error::Io(format!("cannot lock {}: {e}", dir.display()))),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
