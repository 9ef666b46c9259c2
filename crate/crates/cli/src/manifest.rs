//! Artifact bundle bookkeeping: every output file is written through the
//! [`ArtifactWriter`], digested, and listed in a manifest. A rerun with the
//! same config verifies the digests — any mismatch means nondeterminism and
//! fails the run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub scenario: String,
    pub config_sha256: String,
    pub seed: u64,
    pub stream_id: u64,
    pub version: String,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects output files for one run; on failure the already-written files
/// are removed so no partial bundle survives.
pub struct ArtifactWriter {
    dir: PathBuf,
    outputs: Vec<OutputDigest>,
    written: Vec<PathBuf>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            outputs: Vec::new(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes)?;
        self.outputs.push(OutputDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        self.written.push(path);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)
            .map_err(|e| CliError::Runtime(format!("serialize {name}: {e}")))?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    /// Remove everything written so far (error path).
    pub fn discard(self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
    }

    /// Finalize: verify digests against a previous manifest for the same
    /// config (determinism gate), then write the manifest.
    pub fn finish(self, config: &ScenarioConfig) -> Result<Manifest, CliError> {
        let manifest = Manifest {
            schema_version: crate::config::SCHEMA_VERSION,
            scenario: config.scenario.to_string(),
            config_sha256: sha256_hex(&config.canonical_bytes()),
            seed: config.rng.seed,
            stream_id: config.rng.stream_id,
            version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.outputs,
        };
        let manifest_path = self.dir.join(MANIFEST_FILE);
        if let Ok(previous_bytes) = fs::read(&manifest_path) {
            if let Ok(previous) = serde_json::from_slice::<Manifest>(&previous_bytes) {
                if previous.config_sha256 == manifest.config_sha256 {
                    verify_rerun(&previous, &manifest)?;
                }
            }
        }
        let mut bytes = serde_json::to_vec_pretty(&manifest)
            .map_err(|e| CliError::Runtime(format!("serialize manifest: {e}")))?;
        bytes.push(b'\n');
        fs::write(&manifest_path, bytes)?;
        Ok(manifest)
    }
}

fn verify_rerun(previous: &Manifest, current: &Manifest) -> Result<(), CliError> {
    for prev in &previous.outputs {
        if let Some(cur) = current.outputs.iter().find(|o| o.path == prev.path) {
            if cur.sha256 != prev.sha256 {
                return Err(CliError::Runtime(format!(
                    "determinism violation: '{}' differs from the previous run \
                     with the same config ({} vs {})",
                    prev.path, cur.sha256, prev.sha256
                )));
            }
        }
    }
    Ok(())
}

/// Verify all digests of a bundle on disk.
pub fn verify_bundle(dir: &Path) -> Result<Manifest, CliError> {
    let bytes = fs::read(dir.join(MANIFEST_FILE))?;
    let manifest: Manifest = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Runtime(format!("bad manifest: {e}")))?;
    for output in &manifest.outputs {
        let data = fs::read(dir.join(&output.path))?;
        let digest = sha256_hex(&data);
        if digest != output.sha256 {
            return Err(CliError::Runtime(format!(
                "digest mismatch for '{}'",
                output.path
            )));
        }
    }
    Ok(manifest)
}
