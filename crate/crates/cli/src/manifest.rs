//! Inventory of produced artifacts with content digests.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::pipeline::file_sha256;
use crate::{io_error, CliError};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub split_seed: u64,
    pub commands: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub artifacts: Vec<Artifact>,
}

fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Option<Self>, CliError> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| io_error(&path, e))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    /// Adds `files` produced by `command` to the manifest in `dir` and writes
    /// it. A manifest recorded under a different configuration is replaced.
    pub fn record(
        dir: &Path,
        config_hash: &str,
        seed: u64,
        split_seed: u64,
        command: &str,
        started_unix: u64,
        files: &[String],
    ) -> Result<Self, CliError> {
        let mut manifest = match RunManifest::load(dir)? {
            Some(m) if m.config_hash == config_hash => m,
            _ => RunManifest {
                config_hash: config_hash.into(),
                code_version: env!("CARGO_PKG_VERSION").into(),
                seed,
                split_seed,
                commands: Vec::new(),
                started_unix,
                finished_unix: 0,
                artifacts: Vec::new(),
            },
        };
        manifest.commands.push(command.into());
        for f in files {
            let path = dir.join(f);
            let bytes = std::fs::metadata(&path).map_err(|e| io_error(&path, e))?.len();
            let entry = Artifact {
                path: f.clone(),
                sha256: file_sha256(&path)?,
                bytes,
            };
            match manifest.artifacts.iter_mut().find(|a| a.path == *f) {
                Some(a) => *a = entry,
                None => manifest.artifacts.push(entry),
            }
        }
        manifest.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        manifest.finished_unix = unix_now();
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serialises");
        std::fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))?;
        Ok(manifest)
    }

    /// Problems found when checking the manifest in `dir` against
    /// `config_hash` and the files on disk. Empty means verified.
    pub fn verify(dir: &Path, config_hash: &str) -> Result<Vec<String>, CliError> {
        let manifest = RunManifest::load(dir)?
            .ok_or_else(|| CliError::Data(format!("no {MANIFEST_FILE} in {}", dir.display())))?;
        let mut problems = Vec::new();
        if manifest.config_hash != config_hash {
            problems.push(format!(
                "config hash {} differs from recorded {}",
                config_hash, manifest.config_hash
            ));
        }
        for a in &manifest.artifacts {
            let path = dir.join(&a.path);
            if !path.exists() {
                problems.push(format!("{} is missing", a.path));
                continue;
            }
            let digest = file_sha256(&path)?;
            if digest != a.sha256 {
                problems.push(format!("{} digest {digest} differs from recorded {}", a.path, a.sha256));
            }
        }
        Ok(problems)
    }

    pub fn now() -> u64 {
        unix_now()
    }
}
