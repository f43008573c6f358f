//! Run manifests: what was run, with which config and on which inputs.
//!
//! With a mock backend, rerunning the recorded command on files with the
//! recorded hashes reproduces the outputs byte for byte.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHash {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub config_hash: String,
    pub config: RunConfig,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

pub fn file_hash(path: &Path) -> anyhow::Result<FileHash> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(FileHash {
        path: path.to_path_buf(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// `<output>.manifest.json` next to the output file.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, inputs: &[&Path], outputs: &[&Path]) -> anyhow::Result<Self> {
        Ok(Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args: std::env::args().skip(1).collect(),
            config_hash: config.hash()?,
            config: config.clone(),
            inputs: inputs.iter().map(|p| file_hash(p)).collect::<anyhow::Result<_>>()?,
            outputs: outputs.iter().map(|p| file_hash(p)).collect::<anyhow::Result<_>>()?,
        })
    }

    /// Writes the manifest beside the first output.
    pub fn write_beside(&self, output: &Path) -> anyhow::Result<PathBuf> {
        let path = manifest_path(output);
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
