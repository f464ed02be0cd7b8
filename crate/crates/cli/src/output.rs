//! Output files with provenance: every CSV starts with a `#` comment line
//! carrying the seed and config hash, every JSON document has a
//! `provenance` object.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
}

impl Provenance {
    /// Hashes the resolved configuration; the seed is part of it.
    pub fn new(command: &str, seed: u64, config: &impl Serialize) -> Result<Self> {
        let canonical = serde_json::to_string(&json!({ "command": command, "seed": seed, "config": config }))?;
        let config_hash = format!("{:x}", Sha256::digest(canonical.as_bytes()));
        Ok(Provenance { command: command.to_string(), seed, config_hash })
    }

    pub fn comment_line(&self) -> String {
        format!("# gge {} seed={} config_hash={}", self.command, self.seed, self.config_hash)
    }
}

pub struct Sink {
    dir: PathBuf,
    provenance: Provenance,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn new(dir: &Path, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Sink { dir: dir.to_path_buf(), provenance, written: Vec::new() })
    }

    /// Writes a CSV file; `body` receives a writer positioned after the provenance line.
    pub fn csv(&mut self, name: &str, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        writeln!(w, "{}", self.provenance.comment_line())?;
        body(&mut w)?;
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: Value) -> Result<()> {
        let path = self.dir.join(name);
        let doc = json!({ "provenance": self.provenance, "result": value });
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
