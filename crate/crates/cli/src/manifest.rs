use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use grmlr_core::GrmlrConfig;
use serde::Serialize;

/// Written as `manifest.json` next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub config: BTreeMap<String, String>,
    pub input_paths: Vec<PathBuf>,
    pub output_dir: PathBuf,
    pub outputs: Vec<String>,
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, config_path: Option<&Path>, config: &GrmlrConfig, output_dir: &Path) -> Self {
        RunManifest {
            command: command.to_string(),
            config_path: config_path.map(Path::to_path_buf),
            config: config.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            input_paths: Vec::new(),
            output_dir: output_dir.to_path_buf(),
            outputs: Vec::new(),
            seed: config.seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.input_paths.push(path.to_path_buf());
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write(&self) -> Result<()> {
        let path = self.output_dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?)
            .with_context(|| format!("writing {}", path.display()))
    }
}
