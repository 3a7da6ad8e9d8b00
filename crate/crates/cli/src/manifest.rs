use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::commands::{write_atomic, Run};
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one command execution, sufficient to replay it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub run: Run,
    /// Whether the seed came from `--seed`/the config or from entropy.
    pub seed_source: String,
    pub version: String,
    pub out_dir: String,
    /// Files written, relative to `out_dir`.
    pub outputs: Vec<String>,
    pub slope: Option<f64>,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::input(format!("cannot serialise manifest: {e}")))?;
        write_atomic(dir, MANIFEST_FILE, |w| {
            use std::io::Write;
            writeln!(w, "{json}")
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::input(format!("{}: invalid manifest: {e}", path.display())))
    }
}

pub fn version() -> String {
    format!("oulab {}", env!("CARGO_PKG_VERSION"))
}
