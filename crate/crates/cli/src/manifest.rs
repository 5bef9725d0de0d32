use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    /// Fully resolved settings of the command.
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_clock_seconds: f64,
    /// SHA-256 of the resolved problem, including any input files.
    pub input_digest: String,
}

pub fn digest<T: Serialize>(inputs: &T) -> Result<String> {
    let bytes = serde_json::to_vec(inputs)?;
    let hash = Sha256::digest(&bytes);
    Ok(hash.iter().map(|b| format!("{b:02x}")).collect())
}

impl RunManifest {
    /// Writes to `out/manifest.json`, or to stderr without an output directory.
    pub fn emit(&self, out: Option<&Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        match out {
            Some(dir) => {
                let path = dir.join("manifest.json");
                fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
            }
            None => {
                eprintln!("{}", serde_json::to_string(self)?);
                Ok(())
            }
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
