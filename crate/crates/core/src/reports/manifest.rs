use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::harness::ExperimentConfig;
use crate::Error;

use super::Command;

/// Written next to every result file; enough to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    pub config: ExperimentConfig,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub master_seed: u64,
    /// File names relative to the manifest's directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: Command, config: &ExperimentConfig, outputs: Vec<String>) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        RunManifest {
            command,
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
            master_seed: config.master_seed,
            outputs,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let m: RunManifest = serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        if m.master_seed != m.config.master_seed {
            return Err(Error::Manifest(format!(
                "master_seed {} disagrees with config seed {}",
                m.master_seed, m.config.master_seed
            )));
        }
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// The CSV output, resolved against `dir`.
    pub fn csv_path(&self, dir: &Path) -> Option<PathBuf> {
        self.outputs.iter().find(|o| o.ends_with(".csv")).map(|o| dir.join(o))
    }
}
