//! Output directory writer with a content-hash manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Outcome};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub command: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    /// Sorted by path.
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Manifest, CliError> {
        let path = dir.join(MANIFEST);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text)
            .with_context(|| format!("corrupt manifest {}", path.display()))
            .map_err(CliError::Runtime)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files of one command and merges them into the manifest.
pub struct RunDir {
    root: PathBuf,
    command: String,
    written: BTreeMap<String, String>,
}

impl RunDir {
    pub fn create(root: &Path, command: &str) -> Result<RunDir, CliError> {
        fs::create_dir_all(root)
            .with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(RunDir {
            root: root.to_path_buf(),
            command: command.to_string(),
            written: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Pretty JSON with a trailing newline.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(anyhow::Error::from)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_csv(
        &mut self,
        name: &str,
        header: &[&str],
        rows: &[Vec<String>],
    ) -> Result<(), CliError> {
        let bytes = csv_bytes(header, rows)?;
        self.write_bytes(name, &bytes)
    }

    /// Writes the manifest and returns the outcome.
    pub fn finish(self, pass: bool) -> Result<Outcome, CliError> {
        let mut manifest = Manifest::load(&self.root)?;
        manifest
            .entries
            .retain(|e| !self.written.contains_key(&e.path));
        for (path, sha256) in &self.written {
            manifest.entries.push(ManifestEntry {
                path: path.clone(),
                sha256: sha256.clone(),
                command: self.command.clone(),
            });
        }
        manifest.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let mut text = serde_json::to_string_pretty(&manifest).map_err(anyhow::Error::from)?;
        text.push('\n');
        fs::write(self.root.join(MANIFEST), text)?;
        Ok(Outcome {
            pass,
            files: self.written.into_keys().collect(),
            out_dir: self.root,
        })
    }
}

pub fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(anyhow::Error::from)?;
    for r in rows {
        w.write_record(r).map_err(anyhow::Error::from)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Runtime(anyhow::anyhow!("csv: {e}")))
}

/// Shortest round-trip form; empty for a missing value.
pub fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
