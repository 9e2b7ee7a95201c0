use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chembed_core::encoder::sha256_hex;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub wall_time_secs: f64,
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

/// Collects input and output paths during a run; digests are taken when the
/// manifest is written.
#[derive(Debug, Default)]
pub struct Tracker {
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Where the manifest goes unless `--manifest` overrides it.
    pub default_manifest: Option<PathBuf>,
}

impl Tracker {
    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: &Path) {
        if self.default_manifest.is_none() {
            let mut name = path.as_os_str().to_owned();
            name.push(".manifest.json");
            self.default_manifest = Some(PathBuf::from(name));
        }
        self.outputs.push(path.to_path_buf());
    }

    fn digests(paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
        paths
            .iter()
            .map(|p| Ok((p.display().to_string(), digest_file(p)?)))
            .collect()
    }

    pub fn finish(
        &self,
        command: &str,
        seed: u64,
        config: BTreeMap<String, String>,
        wall_time_secs: f64,
    ) -> Result<RunManifest> {
        Ok(RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            inputs: Self::digests(&self.inputs)?,
            outputs: Self::digests(&self.outputs)?,
            wall_time_secs,
        })
    }
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing manifest {}", path.display()))
}
