//! Run manifest written next to every command's outputs.
//!
//! The manifest carries the full resolved [`JobConfig`], so a job can be
//! re-run from it alone, together with SHA-256 digests of the files read
//! and written. Timing fields are the only content that differs between
//! two runs of the same job.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{hex, JobConfig};
use crate::error::{GptcmError, Result};
use crate::model::types::Variant;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileDigest {
    /// Digest of `root/rel`, recorded under the name `rel`.
    pub fn of(root: &Path, rel: &str) -> Result<Self> {
        let (sha256, bytes) = sha256_file(&root.join(rel))?;
        Ok(Self {
            path: rel.to_string(),
            sha256,
            bytes,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub variant: Option<Variant>,
    pub config_hash: String,
    pub config: JobConfig,
    /// Input paths as given on the command line.
    pub inputs: Vec<FileDigest>,
    /// Output paths relative to the output directory.
    pub outputs: Vec<FileDigest>,
    pub started_unix: u64,
    pub elapsed_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: &JobConfig, seed: u64, variant: Option<Variant>) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            variant,
            config_hash: config.hash(),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started_unix: 0,
            elapsed_seconds: 0.0,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        let (sha256, bytes) = sha256_file(path)?;
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256,
            bytes,
        });
        Ok(())
    }

    /// Records every file of a bundle directory that exists, in sorted order.
    pub fn add_input_dir(&mut self, dir: &Path) -> Result<()> {
        let mut names: Vec<_> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().is_file())
            .map(|e| e.path())
            .collect();
        names.sort();
        for p in names {
            self.add_input(&p)?;
        }
        Ok(())
    }

    pub fn add_outputs(&mut self, root: &Path, rels: &[String]) -> Result<()> {
        for r in rels {
            self.outputs.push(FileDigest::of(root, r)?);
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path)?;
        serde_json::from_str(&text).map_err(|e| GptcmError::Parse {
            file: path.display().to_string(),
            msg: e.to_string(),
        })
    }
}

/// Hex SHA-256 and byte length of a file.
pub fn sha256_file(path: &Path) -> Result<(String, u64)> {
    let mut f = fs::File::open(path)
        .map_err(|e| GptcmError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let k = f.read(&mut buf)?;
        if k == 0 {
            break;
        }
        total += k as u64;
        h.update(&buf[..k]);
    }
    Ok((hex(&h.finalize()), total))
}

/// Recomputes every digest in `dir/manifest.json` and the config hash.
/// Returns one message per mismatch; empty means the directory verifies.
pub fn verify_manifest(dir: &Path) -> Result<Vec<String>> {
    let m = RunManifest::read(dir)?;
    let mut problems = Vec::new();
    if m.config.hash() != m.config_hash {
        problems.push("config hash does not match the stored config".to_string());
    }
    let check = |d: &FileDigest, path: &Path, problems: &mut Vec<String>| match sha256_file(path) {
        Ok((sha, bytes)) if sha == d.sha256 && bytes == d.bytes => {}
        Ok(_) => problems.push(format!("{} changed since the run", d.path)),
        Err(e) => problems.push(format!("{}: {e}", d.path)),
    };
    for d in &m.inputs {
        check(d, Path::new(&d.path), &mut problems);
    }
    for d in &m.outputs {
        check(d, &dir.join(&d.path), &mut problems);
    }
    Ok(problems)
}
