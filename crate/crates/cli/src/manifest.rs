//! `manifest.json` written next to every output set.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// SHA-256 of a file, or of a directory's sorted `name\0contents` stream.
pub fn hash_path(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)
            .with_context(|| format!("listing {}", path.display()))?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        entries.sort();
        for p in entries.iter().filter(|p| p.is_file()) {
            h.update(p.file_name().unwrap().to_string_lossy().as_bytes());
            h.update([0]);
            h.update(std::fs::read(p).with_context(|| format!("reading {}", p.display()))?);
        }
    } else {
        h.update(std::fs::read(path).with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(hex(&h.finalize()))
}

#[derive(Debug, Default)]
pub struct Manifest {
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub config: BTreeMap<String, Value>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, args: &[String]) -> Self {
        Self {
            command: command.to_string(),
            args: args.to_vec(),
            ..Default::default()
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), hash_path(path)?);
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.config.insert(key.to_string(), value.into());
    }

    pub fn to_json(&self) -> String {
        let v = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "args": self.args,
            "seed": self.seed,
            "config": self.config,
            "inputs": self.inputs,
            "outputs": self.outputs,
        });
        serde_json::to_string_pretty(&v).expect("manifest serializes") + "\n"
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let p = dir.join("manifest.json");
        std::fs::write(&p, self.to_json()).with_context(|| format!("writing {}", p.display()))
    }
}
