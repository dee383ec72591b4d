use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::error::{CliError, Result};
use crate::io;

/// Record written next to the outputs of every run. `invocation` holds the
/// fully resolved flags (environment defaults included), so `rerun` does
/// not depend on the environment it is replayed in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub invocation: Command,
    /// Resolved estimation settings.
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub duration_secs: f64,
}

impl RunManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_json(path, self)
    }

    pub fn read(path: &Path) -> Result<Self> {
        serde_json::from_str(&io::read_to_string(path)?)
            .map_err(|e| CliError::usage(format!("{}: malformed manifest: {e}", path.display())))
    }
}

/// `dir/name.csv` -> `dir/name.manifest.json`.
pub fn manifest_path_for(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}
