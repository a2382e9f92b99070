//! Run manifests: every artifact-producing command records what it ran with.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// What produced an artifact: the command, its full argument echo, the seed,
/// digests of every input file, and the tool version. Two runs with equal
/// manifests must produce byte-identical outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        RunManifest {
            tool: "prob2vec",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            seed,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        let bytes = std::fs::read(path)
            .with_context(|| format!("reading input {}", path.display()))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.insert(path.display().to_string(), hex);
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.display().to_string());
        self
    }

    /// Write the manifest next to the primary output as
    /// `<output>.manifest.json`.
    pub fn write_next_to(&self, primary_output: &Path) -> Result<()> {
        let mut name = primary_output.file_name().unwrap_or_default().to_owned();
        name.push(".manifest.json");
        let path: PathBuf = primary_output.with_file_name(name);
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, json.as_bytes())
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }
}
