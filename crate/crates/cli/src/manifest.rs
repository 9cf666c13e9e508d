//! Run manifests: every subcommand records its resolved configuration, seed,
//! timestamps, and output paths next to its artifacts.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

#[derive(Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<String>,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64, config: serde_json::Value) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            seed,
            config,
            started_unix: unix_now(),
            finished_unix: 0,
            outputs: Vec::new(),
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Stamps the end time and writes `manifest.json` into `dir`, returning
    /// its path.
    pub fn finish(mut self, dir: &Path) -> std::io::Result<PathBuf> {
        self.finished_unix = unix_now();
        let path = dir.join("manifest.json");
        let body = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(&path, body)?;
        Ok(path)
    }
}
