//! Run directory bookkeeping: artifact files, provenance headers and the
//! manifest of `(name, sha256, stage)` entries.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::corpus::META_KEY;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub sha256: String,
    pub stage: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifacts: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn get(&self, name: &str) -> Option<&ManifestEntry> {
        self.artifacts.iter().find(|e| e.name == name)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// An artifact directory owned by one stage invocation.
pub struct RunDir {
    root: PathBuf,
    stage: &'static str,
    meta: Value,
}

impl RunDir {
    pub fn open(root: &Path, stage: &'static str, seed: u64, config: Value) -> Result<Self, PipelineError> {
        fs::create_dir_all(root).map_err(|e| io_err(root, e))?;
        Ok(RunDir {
            root: root.to_path_buf(),
            stage,
            meta: json!({
                "producer": concat!("disinfo ", env!("CARGO_PKG_VERSION")),
                "stage": stage,
                "seed": seed,
                "config": config,
            }),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn meta(&self) -> &Value {
        &self.meta
    }

    /// Provenance as `#`-prefixed lines for CSV and script artifacts.
    pub fn comment_header(&self, prefix: &str) -> String {
        format!("{prefix} {}\n", self.meta)
    }

    /// Requires an input artifact produced by an earlier stage.
    pub fn input(&self, name: &str) -> Result<PathBuf, PipelineError> {
        let p = self.path(name);
        if p.is_file() {
            Ok(p)
        } else {
            Err(PipelineError::MissingInput {
                stage: self.stage,
                path: p.display().to_string(),
            })
        }
    }

    /// Writes `bytes` to `path` and records it in the manifest. Paths
    /// inside the run directory are recorded relative to it.
    pub fn write_at(&self, path: &Path, bytes: &[u8]) -> Result<String, PipelineError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
        fs::write(path, bytes).map_err(|e| io_err(path, e))?;
        let name = path
            .strip_prefix(&self.root)
            .map(|p| p.to_string_lossy().replace('\\', "/"))
            .unwrap_or_else(|_| path.display().to_string());
        let digest = sha256_hex(bytes);
        self.record(&name, &digest)?;
        Ok(digest)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<String, PipelineError> {
        self.write_at(&self.path(name), bytes)
    }

    /// JSON artifact wrapped as `{"_meta": ..., key: data}`.
    pub fn write_json<T: Serialize>(&self, name: &str, key: &str, data: &T) -> Result<String, PipelineError> {
        let doc = json!({ META_KEY: self.meta, key: data });
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| PipelineError::Stage {
            stage: self.stage,
            message: e.to_string(),
        })?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// JSONL artifact: one `{"_meta": ...}` line, then one record per line.
    pub fn write_jsonl<T: Serialize>(&self, name: &str, records: &[T]) -> Result<String, PipelineError> {
        let mut text = json!({ META_KEY: self.meta }).to_string();
        text.push('\n');
        for r in records {
            text.push_str(&serde_json::to_string(r).map_err(|e| PipelineError::Stage {
                stage: self.stage,
                message: e.to_string(),
            })?);
            text.push('\n');
        }
        self.write(name, text.as_bytes())
    }

    fn record(&self, name: &str, sha256: &str) -> Result<(), PipelineError> {
        let mut manifest = read_manifest(&self.root)?;
        let entry = ManifestEntry {
            name: name.to_string(),
            sha256: sha256.to_string(),
            stage: self.stage.to_string(),
        };
        match manifest.artifacts.iter_mut().find(|e| e.name == name) {
            Some(e) => *e = entry,
            None => manifest.artifacts.push(entry),
        }
        manifest.artifacts.sort_by(|a, b| a.name.cmp(&b.name));
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        text.push('\n');
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).map_err(|e| io_err(&path, e))
    }
}

pub fn read_manifest(root: &Path) -> Result<Manifest, PipelineError> {
    let path = root.join(MANIFEST);
    if !path.exists() {
        return Ok(Manifest::default());
    }
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(&path, e))
}

/// Reads the `key` payload of a [`RunDir::write_json`] artifact.
pub fn read_json<T: DeserializeOwned>(path: &Path, key: &str) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut doc: Value = serde_json::from_str(&text).map_err(|e| io_err(path, e))?;
    let payload = doc
        .get_mut(key)
        .map(Value::take)
        .ok_or_else(|| io_err(path, format!("missing '{key}'")))?;
    serde_json::from_value(payload).map_err(|e| io_err(path, e))
}

/// Reads a JSONL artifact, skipping its `_meta` line and blank lines.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, PipelineError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&line).map_err(|e| io_err(path, format!("line {}: {e}", n + 1)))?;
        if value.get(META_KEY).is_some() && value.as_object().is_some_and(|o| o.len() == 1) {
            continue;
        }
        out.push(serde_json::from_value(value).map_err(|e| io_err(path, format!("line {}: {e}", n + 1)))?);
    }
    Ok(out)
}
