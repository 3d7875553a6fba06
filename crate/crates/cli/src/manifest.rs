//! Run manifests: what was run, with which configuration, and checksums of every output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{Experiment, ExperimentConfig};
use crate::error::{CliError, CliResult};

pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// Computed and kept without a pass/fail gate.
    Recorded,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Self::Pass
        } else {
            Self::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Recorded => "recorded",
        }
    }
}

/// One property checked by a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub property: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub version: String,
    /// The validated configuration as TOML; feeding it back reproduces the run.
    pub config_toml: String,
    pub config: ExperimentConfig,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputFile>,
    pub checks: Vec<Check>,
}

impl RunManifest {
    pub fn file_name(experiment: Experiment) -> String {
        format!("{}-manifest.json", experiment.name())
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(dir.join(Self::file_name(self.experiment)), text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("cannot read manifest {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Runtime(format!("{} is not a run manifest: {e}", path.display())))
    }

    /// Checksums only; two runs with equal digests produced identical bytes.
    pub fn digests(&self) -> Vec<(&str, &str)> {
        self.outputs.iter().map(|o| (o.file.as_str(), o.sha256.as_str())).collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
