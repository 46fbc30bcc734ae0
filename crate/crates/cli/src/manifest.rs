//! Run manifests written beside every output.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub channel_sha256: Option<String>,
    pub params: serde_json::Value,
    pub seed: u64,
    pub version: &'static str,
    /// Seconds since the epoch; `SOURCE_DATE_EPOCH` wins when set.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, channel: Option<&Path>, params: impl Serialize, seed: u64) -> CliResult<Self> {
        let channel_sha256 = match channel {
            Some(p) => Some(file_sha256(p)?),
            None => None,
        };
        Ok(RunManifest {
            command: command.to_string(),
            channel_sha256,
            params: serde_json::to_value(params).map_err(dirl::DirlError::from)?,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            timestamp: timestamp(),
        })
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let text = serde_json::to_string_pretty(self).map_err(dirl::DirlError::from)?;
        write_file(&dir.join("manifest.json"), &(text + "\n"))
    }
}

fn timestamp() -> u64 {
    if let Some(v) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()) {
        return v;
    }
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn file_sha256(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}
