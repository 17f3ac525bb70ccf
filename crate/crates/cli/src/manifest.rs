//! Provenance sidecars written next to every output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const TOOL: &str = "oclust";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    /// sha256 of the input file bytes, if the command reads one.
    pub input_digest: Option<String>,
    pub outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, config: serde_json::Value, input_digest: Option<String>) -> Self {
        Self {
            tool: TOOL.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config,
            input_digest,
            outputs: Vec::new(),
        }
    }

    /// Record an already written file under `name`.
    pub fn add_output(&mut self, name: &str, path: &Path) -> CliResult<()> {
        self.outputs.push(OutputEntry { file: name.to_string(), sha256: digest_file(path)? });
        Ok(())
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: e.line() as u64,
            column: e.column(),
            message: e.to_string(),
        })
    }
}

pub fn digest_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(digest_bytes(&bytes))
}

/// `data.csv` → `data.csv.manifest.json`.
pub fn sidecar_path(out: &Path) -> std::path::PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}
