use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

/// Identifies the run that produced a file. Deliberately timestamp-free so
/// reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub command: &'static str,
    pub config_hash: String,
    pub seed: Option<u64>,
}

impl Provenance {
    fn seed_str(&self) -> String {
        self.seed.map_or_else(|| "none".to_string(), |s| s.to_string())
    }

    pub fn comment(&self) -> String {
        format!("# qnet {} config_hash={} seed={}", self.command, self.config_hash, self.seed_str())
    }

    pub fn json(&self) -> Value {
        json!({"command": self.command, "config_hash": self.config_hash, "seed": self.seed})
    }
}

pub struct OutputDir {
    dir: PathBuf,
    provenance: Provenance,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(dir: &Path, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(OutputDir { dir: dir.to_path_buf(), provenance, written: Vec::new() })
    }

    /// Writes the provenance comment followed by `body` (header row first).
    pub fn csv(&mut self, name: &str, body: &[u8]) -> Result<()> {
        let mut bytes = format!("{}\n", self.provenance.comment()).into_bytes();
        bytes.extend_from_slice(body);
        self.write(name, &bytes)
    }

    /// Writes `doc` with a `provenance` member; JSON has no comments.
    pub fn json(&mut self, name: &str, mut doc: Value) -> Result<()> {
        if let Value::Object(m) = &mut doc {
            m.insert("provenance".into(), self.provenance.json());
        }
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
