//! Run manifests: what was run, with which configuration, on which inputs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Arguments after the program name, without output paths and thread
    /// settings, which do not affect results.
    pub command_line: Vec<String>,
    pub command: String,
    pub config: Value,
    /// SHA-256 of the canonical JSON of `command` and `config`.
    pub config_hash: String,
    pub seeds: Vec<u64>,
    /// File name → SHA-256 of the input bytes.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub artifact_version: String,
    /// Only recorded on request, since it breaks byte-identical reruns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

impl RunManifest {
    pub fn new(command: &str, command_line: Vec<String>, config: Value, seeds: Vec<u64>) -> Self {
        // serde_json maps are ordered, so this is canonical.
        let canon = serde_json::to_string(&serde_json::json!({ "command": command, "config": config }))
            .expect("config serializes");
        RunManifest {
            command_line,
            command: command.into(),
            config,
            config_hash: sha256_hex(canon.as_bytes()),
            seeds,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            artifact_version: env!("CARGO_PKG_VERSION").into(),
            wall_clock_seconds: None,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        self.inputs.insert(name, file_digest(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, name: impl Into<String>) {
        self.outputs.push(name.into());
    }

    /// The comment line placed at the top of every output file.
    pub fn reference(&self, manifest_name: &str) -> String {
        format!("manifest: {manifest_name} config_hash={}", self.config_hash)
    }
}

/// Drop flags (with their values) that do not influence results. Handles
/// both `--flag value` and `--flag=value`.
pub fn normalize_command_line(args: &[String], strip: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if strip.contains(&a.as_str()) {
            it.next();
            continue;
        }
        if strip.iter().any(|s| a.starts_with(&format!("{s}="))) {
            continue;
        }
        out.push(a.clone());
    }
    out
}
