//! Staged artifact writing and the per-run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Artifacts are written as `<name>.partial` and renamed only by
/// [`Staging::commit`], so a failed run leaves nothing that looks complete.
pub struct Staging {
    dir: PathBuf,
    inputs: Vec<PathBuf>,
    staged: Vec<(PathBuf, PathBuf, String)>,
}

impl Staging {
    pub fn new(dir: &Path, inputs: &[PathBuf]) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let inputs = inputs
            .iter()
            .filter_map(|p| fs::canonicalize(p).ok())
            .collect();
        Ok(Staging {
            dir: dir.to_path_buf(),
            inputs,
            staged: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let target = self.path(name);
        if let Ok(existing) = fs::canonicalize(&target) {
            if self.inputs.contains(&existing) {
                bail!("refusing to overwrite input file {}", target.display());
            }
        }
        if self.staged.iter().any(|(t, _, _)| *t == target) {
            bail!("artifact {} written twice in one run", target.display());
        }
        let partial = partial_path(&target);
        fs::write(&partial, bytes).with_context(|| format!("writing {}", partial.display()))?;
        self.staged
            .push((target.clone(), partial, sha256_hex(bytes)));
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn commit(self) -> Result<Vec<FileDigest>> {
        let mut out = Vec::with_capacity(self.staged.len());
        for (target, partial, sha256) in self.staged {
            fs::rename(&partial, &target)
                .with_context(|| format!("renaming {} into place", partial.display()))?;
            out.push(FileDigest {
                path: target,
                sha256,
            });
        }
        Ok(out)
    }
}

fn partial_path(target: &Path) -> PathBuf {
    let mut name = target.file_name().unwrap_or_default().to_os_string();
    name.push(".partial");
    target.with_file_name(name)
}

/// Everything needed to re-run a stage. Timestamps appear only here.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub config_sha256: String,
    /// Effective configuration after flag overrides.
    pub config: Value,
    pub seed: u64,
    pub counts: Value,
    pub outputs: Vec<FileDigest>,
    pub started_at: String,
    pub finished_at: String,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("manifest.{}.json", self.command));
        let partial = partial_path(&path);
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(&partial, text)?;
        fs::rename(&partial, &path)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn staged_files_appear_only_on_commit() {
        let dir = tempfile::tempdir().unwrap();
        let mut staging = Staging::new(dir.path(), &[]).unwrap();
        let target = staging.write("a.jsonl", b"x\n").unwrap();
        assert!(!target.exists());
        assert!(dir.path().join("a.jsonl.partial").exists());
        let digests = staging.commit().unwrap();
        assert!(target.exists());
        assert!(!dir.path().join("a.jsonl.partial").exists());
        assert_eq!(digests[0].sha256, sha256_hex(b"x\n"));
    }

    #[test]
    fn refuses_to_overwrite_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.jsonl");
        fs::write(&input, "").unwrap();
        let mut staging = Staging::new(dir.path(), &[input]).unwrap();
        assert!(staging.write("in.jsonl", b"").is_err());
    }
}
