//! Run manifests: everything needed to reproduce a command's outputs.

use std::path::Path;

use projgate_core::montecarlo::MonteCarloConfig;
use projgate_core::rt::RtConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::csvio::HeaderMode;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;
pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataRun {
    pub input: String,
    pub header: HeaderMode,
    pub rt: RtConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Run {
    Trim(DataRun),
    Estimate {
        input: String,
        header: HeaderMode,
        rt: RtConfig,
        weights: Option<String>,
        pca: Option<usize>,
    },
    Simulate {
        config: MonteCarloConfig,
        emit_data: bool,
    },
    Detect(DataRun),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub run: Run,
    /// SHA-256 of the input data file, hex encoded.
    pub input_digest: Option<String>,
    pub weights_digest: Option<String>,
}

impl RunManifest {
    /// Builds a manifest, hashing the files the run reads.
    pub fn new(run: Run) -> CliResult<Self> {
        let (seed, input, weights) = match &run {
            Run::Trim(r) | Run::Detect(r) => (r.rt.seed, Some(r.input.as_str()), None),
            Run::Estimate {
                input, rt, weights, ..
            } => (rt.seed, Some(input.as_str()), weights.as_deref()),
            Run::Simulate { config, .. } => (config.master_seed, None, None),
        };
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            input_digest: input.map(|p| file_digest(Path::new(p))).transpose()?,
            weights_digest: weights.map(|p| file_digest(Path::new(p))).transpose()?,
            run,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let manifest: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        if manifest.schema_version != SCHEMA_VERSION {
            return Err(CliError::data(format!(
                "{}: unsupported schema_version {}",
                path.display(),
                manifest.schema_version
            )));
        }
        Ok(manifest)
    }

    /// Fails when an input file no longer matches its recorded digest.
    pub fn check_inputs(&self) -> CliResult<()> {
        let current = Self::new(self.run.clone())?;
        if current.input_digest != self.input_digest
            || current.weights_digest != self.weights_digest
        {
            return Err(CliError::data(
                "input files changed since the manifest was written (digest mismatch)",
            ));
        }
        Ok(())
    }
}

pub fn file_digest(path: &Path) -> CliResult<String> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}
