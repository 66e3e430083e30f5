//! Run manifest: everything needed to reproduce an output directory.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputFile {
    pub role: String,
    /// Filesystem path, or `bundled:<name>` for embedded data.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub inputs: Vec<InputFile>,
    pub seed: Option<u64>,
    pub output_dir: String,
    pub version: String,
    /// SHA-256 of the normalized parameter document.
    pub param_hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, params_toml: &str, out: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            args,
            inputs: Vec::new(),
            seed: None,
            output_dir: out.display().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            param_hash: sha256_hex(params_toml.as_bytes()),
        }
    }

    pub fn input(&mut self, role: &str, path: &str, contents: &[u8]) {
        self.inputs.push(InputFile {
            role: role.to_string(),
            path: path.to_string(),
            sha256: sha256_hex(contents),
        });
    }

    /// Create the directory and write `manifest.json` plus the normalized
    /// parameters next to it.
    pub fn write(&self, out: &Path, params_toml: &str) -> Result<()> {
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        let path = out.join(MANIFEST_FILE);
        std::fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))?;
        let path = out.join("params.toml");
        std::fs::write(&path, params_toml).map_err(|e| CliError::io(&path, e))?;
        Ok(())
    }
}
