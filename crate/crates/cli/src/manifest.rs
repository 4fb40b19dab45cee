use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Record of one command invocation, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Hash of the effective settings; independent of flag order.
    pub fingerprint: String,
    pub settings: Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
    pub duration_seconds: f64,
    pub success: bool,
    pub error: Option<String>,
}

/// Stable hash of a settings object. `serde_json` maps keep keys sorted, so
/// the serialization is canonical.
pub fn fingerprint(settings: &Value) -> String {
    let digest = Sha256::digest(settings.to_string().as_bytes());
    hex::encode(&digest[..8])
}

pub struct ManifestBuilder {
    command: String,
    settings: Value,
    seeds: Vec<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, settings: impl Serialize) -> Self {
        ManifestBuilder {
            command: command.to_owned(),
            settings: serde_json::to_value(settings).expect("settings serialize"),
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn seeds(mut self, seeds: impl IntoIterator<Item = u64>) -> Self {
        self.seeds.extend(seeds);
        self
    }

    pub fn input(mut self, path: impl Into<PathBuf>) -> Self {
        self.inputs.push(path.into());
        self
    }

    pub fn output(mut self, path: impl Into<PathBuf>) -> Self {
        self.outputs.push(path.into());
        self
    }

    pub fn finish(self, result: &anyhow::Result<()>) -> RunManifest {
        RunManifest {
            command: self.command,
            fingerprint: fingerprint(&self.settings),
            settings: self.settings,
            seeds: self.seeds,
            inputs: self.inputs,
            outputs: self.outputs,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            duration_seconds: self.started.elapsed().as_secs_f64(),
            success: result.is_ok(),
            error: result.as_ref().err().map(|e| format!("{e:#}")),
        }
    }
}

pub fn write_manifest(manifest: &RunManifest, path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let text = serde_json::to_string_pretty(manifest)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// `<output>.manifest.json` beside a file output.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}
