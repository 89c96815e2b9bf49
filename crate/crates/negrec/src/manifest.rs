//! Run manifests: every subcommand records what it read, what it wrote, and
//! the checksums of both, beside each output file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::AppError;
use crate::formats::sha256_hex;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileStamp {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileStamp>,
    pub outputs: Vec<FileStamp>,
    pub duration_ms: u64,
}

pub fn stamp(path: &Path) -> Result<FileStamp, AppError> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    Ok(FileStamp {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.push_str(".manifest.json");
    output.with_file_name(name)
}

/// Collects inputs/outputs while a subcommand runs, then writes the manifest
/// beside the primary output.
pub struct ManifestBuilder {
    command: String,
    argv: Vec<String>,
    seeds: Vec<u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, argv: Vec<String>) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            argv,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn seed(&mut self, seed: u64) -> &mut Self {
        self.seeds.push(seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.to_path_buf());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    /// Stamps all recorded files and writes the manifest beside the first
    /// output.
    pub fn write(self) -> Result<(), AppError> {
        let primary = match self.outputs.first() {
            Some(p) => p.clone(),
            None => return Ok(()),
        };
        let manifest = RunManifest {
            command: self.command,
            argv: self.argv,
            seeds: self.seeds,
            inputs: self
                .inputs
                .iter()
                .map(|p| stamp(p))
                .collect::<Result<_, _>>()?,
            outputs: self
                .outputs
                .iter()
                .map(|p| stamp(p))
                .collect::<Result<_, _>>()?,
            duration_ms: self.started.elapsed().as_millis() as u64,
        };
        let path = manifest_path(&primary);
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, body).map_err(|e| AppError::io(&path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lands_beside_the_output() {
        assert_eq!(
            manifest_path(Path::new("/x/y/report.json")),
            PathBuf::from("/x/y/report.json.manifest.json")
        );
    }

    #[test]
    fn stamps_cover_outputs() {
        let dir = std::env::temp_dir().join(format!("negrec-man-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let out = dir.join("artifact.json");
        fs::write(&out, b"{}").unwrap();

        let mut b = ManifestBuilder::new("test", vec!["negrec".into(), "test".into()]);
        b.seed(7).output(&out);
        b.write().unwrap();

        let manifest: RunManifest =
            serde_json::from_str(&fs::read_to_string(manifest_path(&out)).unwrap()).unwrap();
        assert_eq!(manifest.command, "test");
        assert_eq!(manifest.seeds, vec![7]);
        assert_eq!(manifest.outputs.len(), 1);
        assert_eq!(manifest.outputs[0].sha256, sha256_hex(b"{}"));
    }
}
