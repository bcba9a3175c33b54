//! Checksum manifest written next to every run's artifacts.

use crate::config::ExperimentConfig;
use crate::CliResult;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    /// `files` are relative to `dir`.
    pub fn build(cfg: &ExperimentConfig, dir: &Path, files: &[PathBuf]) -> CliResult<Self> {
        let mut entries = Vec::with_capacity(files.len());
        for f in files {
            let data = std::fs::read(dir.join(f))?;
            entries.push(FileEntry { path: f.clone(), bytes: data.len() as u64, sha256: sha256_hex(&data) });
        }
        Ok(Manifest {
            tool: "isingdd".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_sha256: sha256_hex(cfg.canonical_json().as_bytes()),
            config: cfg.clone(),
            files: entries,
        })
    }
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> CliResult<()> {
    let text = serde_json::to_string_pretty(m).expect("manifest serialises") + "\n";
    std::fs::write(dir.join(MANIFEST_NAME), text)?;
    Ok(())
}

/// Files in `dir` whose size or checksum differs from the manifest.
pub fn verify_manifest(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let text = std::fs::read_to_string(dir.join(MANIFEST_NAME))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| crate::CliError::Config(format!("manifest: {e}")))?;
    let mut bad = Vec::new();
    for f in &m.files {
        match std::fs::read(dir.join(&f.path)) {
            Ok(data) if data.len() as u64 == f.bytes && sha256_hex(&data) == f.sha256 => {}
            _ => bad.push(f.path.clone()),
        }
    }
    Ok(bad)
}
