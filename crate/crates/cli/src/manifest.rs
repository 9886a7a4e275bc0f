// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ConfigMap;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance record written next to every subcommand's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    /// SHA-256 of the resolved configuration in canonical form.
    pub config_hash: String,
    pub config: BTreeMap<String, String>,
    /// SHA-256 of each output file, keyed by file name.
    pub outputs: BTreeMap<String, String>,
}

pub fn version_string() -> String {
    format!("lrood {}", env!("CARGO_PKG_VERSION"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory that remembers the checksum of everything written to it.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    outputs: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            outputs: BTreeMap::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(CliError::io(&path))?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Data(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Writes the manifest and returns it.
    pub fn finish(self, command: &str, config: &ConfigMap) -> CliResult<Manifest> {
        let manifest = Manifest {
            command: command.to_string(),
            version: version_string(),
            config_hash: sha256_hex(config.canonical().as_bytes()),
            config: config.resolved(),
            outputs: self.outputs,
        };
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Data(e.to_string()))? + "\n";
        std::fs::write(&path, text).map_err(CliError::io(&path))?;
        Ok(manifest)
    }
}
