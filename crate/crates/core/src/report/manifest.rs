use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRecord {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
    Skipped,
}

/// One analysis cell demanded by the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryCell {
    pub analysis: String,
    pub period: String,
    pub filter_state: Option<String>,
    pub subject: String,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub subject: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub artifacts: Vec<ArtifactRecord>,
    pub inventory: Vec<InventoryCell>,
    pub failures: Vec<Failure>,
}

impl Manifest {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config_hash.into(),
            seed,
            artifacts: vec![],
            inventory: vec![],
            failures: vec![],
        }
    }

    pub fn cells(&self, analysis: &str) -> impl Iterator<Item = &InventoryCell> {
        let analysis = analysis.to_string();
        self.inventory.iter().filter(move |c| c.analysis == analysis)
    }

    pub fn is_clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Writes artifacts under one directory and records their digests.
#[derive(Debug)]
pub struct ArtifactWriter {
    root: PathBuf,
    records: Mutex<Vec<ArtifactRecord>>,
}

impl ArtifactWriter {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root)?;
        Ok(ArtifactWriter { root, records: Mutex::new(vec![]) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        if rel.is_empty() || rel.starts_with('/') || rel.split('/').any(|p| p == "..") {
            return Err(Error::Contract(format!("artifact path {rel:?} escapes the output directory")));
        }
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes)?;
        let rec = ArtifactRecord { path: rel.to_string(), sha256: hex::encode(Sha256::digest(bytes)), bytes: bytes.len() as u64 };
        let mut records = self.records.lock().expect("artifact lock poisoned");
        records.retain(|r| r.path != rel);
        records.push(rec);
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, rel: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    /// Records sorted by path.
    pub fn records(&self) -> Vec<ArtifactRecord> {
        let mut r = self.records.lock().expect("artifact lock poisoned").clone();
        r.sort_by(|a, b| a.path.cmp(&b.path));
        r
    }
}
