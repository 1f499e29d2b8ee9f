//! Reproducibility record written next to every command's artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// What went into a run and what came out. Contains no clock or host
/// state, so equal inputs make equal manifests.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// SHA-256 over the canonicalized effective configuration.
    pub config_digest: String,
    pub rng_seeds: BTreeMap<String, u64>,
    pub versions: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, canonical_config: &str) -> RunManifest {
        let versions = [
            ("crosslight-cli", env!("CARGO_PKG_VERSION")),
            ("crosslight-control", crosslight_control::VERSION),
            ("crosslight-kernels", crosslight_kernels::VERSION),
            ("crosslight-metrics", crosslight_metrics::VERSION),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect();
        RunManifest {
            command: command.to_string(),
            config_digest: hex::encode(Sha256::digest(canonical_config.as_bytes())),
            rng_seeds: BTreeMap::new(),
            versions,
            outputs: Vec::new(),
        }
    }

    pub fn with_seed(mut self, name: &str, value: u64) -> RunManifest {
        self.rng_seeds.insert(name.to_string(), value);
        self
    }
}

/// Write the named artifacts into `dir`, then `manifest.json` listing
/// them. Returns the manifest path's directory for reporting.
pub fn write_run(dir: &Path, mut manifest: RunManifest, files: &[(&str, &str)]) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    for (name, contents) in files {
        std::fs::write(dir.join(name), contents)
            .with_context(|| format!("writing {}", dir.join(name).display()))?;
        manifest.outputs.push((*name).to_string());
    }
    manifest.outputs.push("manifest.json".to_string());
    let json = serde_json::to_string_pretty(&manifest).context("serializing manifest")?;
    std::fs::write(dir.join("manifest.json"), json + "\n")
        .with_context(|| format!("writing {}", dir.join("manifest.json").display()))?;
    Ok(())
}
