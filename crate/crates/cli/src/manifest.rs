//! Run manifests written next to every output.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub config: Value,
    pub seed: Option<u64>,
    pub version: &'static str,
    pub wall_time_s: f64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

/// `table.csv` gets `table.csv.manifest.json`.
pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    primary.with_file_name(name)
}

/// Collects outputs as they are written and emits the manifest last.
pub struct Recorder {
    subcommand: &'static str,
    config: Value,
    seed: Option<u64>,
    inputs: Vec<FileDigest>,
    outputs: Vec<(PathBuf, String)>,
}

impl Recorder {
    pub fn new(subcommand: &'static str, config: Value, seed: Option<u64>, inputs: &[&Path]) -> Result<Self> {
        Ok(Recorder {
            subcommand,
            config,
            seed,
            inputs: inputs.iter().map(|p| digest_file(p)).collect::<Result<_>>()?,
            outputs: Vec::new(),
        })
    }

    pub fn write(&mut self, path: &Path, contents: &str) -> Result<()> {
        fs::write(path, contents).map_err(|e| CliError::write(path, e))?;
        self.outputs.push((path.to_path_buf(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    /// Writes the manifest beside the first output; does nothing without outputs.
    pub fn finish(self, wall: Duration) -> Result<Option<PathBuf>> {
        let Some((primary, _)) = self.outputs.first() else {
            return Ok(None);
        };
        let path = manifest_path(primary);
        let m = RunManifest {
            subcommand: self.subcommand,
            config: self.config,
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION"),
            wall_time_s: wall.as_secs_f64(),
            inputs: self.inputs,
            outputs: self
                .outputs
                .iter()
                .map(|(p, h)| FileDigest {
                    path: p.display().to_string(),
                    sha256: h.clone(),
                })
                .collect(),
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(|e| CliError::write(&path, e))?;
        Ok(Some(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_sits_beside_output() {
        assert_eq!(manifest_path(Path::new("out/t.csv")), Path::new("out/t.csv.manifest.json"));
    }
}
