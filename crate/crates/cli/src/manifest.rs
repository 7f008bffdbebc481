//! Run manifests: a JSON file next to each output recording the command,
//! input hashes, the effective configuration and the tool version.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}

/// SHA-256 of a file, or of every file below a directory (relative path and
/// contents, in sorted path order).
pub fn hash_path(path: &Path) -> Result<String> {
    let mut h = Sha256::new();
    if path.is_dir() {
        let mut files = Vec::new();
        collect_files(path, &mut files)?;
        files.sort();
        for f in files {
            let rel = f.strip_prefix(path).unwrap_or(&f);
            h.update(rel.to_string_lossy().as_bytes());
            h.update([0]);
            h.update(fs::read(&f).with_context(|| format!("reading {}", f.display()))?);
            h.update([0]);
        }
    } else {
        h.update(fs::read(path).with_context(|| format!("reading {}", path.display()))?);
    }
    Ok(hex(&h.finalize()))
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub inputs: BTreeMap<String, String>,
    pub config: Value,
    pub config_sha256: String,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, inputs: &[&Path], config: &C) -> Result<Self> {
        let mut hashes = BTreeMap::new();
        for p in inputs {
            hashes.insert(p.display().to_string(), hash_path(p)?);
        }
        // serde_json maps are ordered, so the serialization is canonical.
        let config = serde_json::to_value(config)?;
        let config_sha256 = hex(&Sha256::digest(serde_json::to_vec(&config)?));
        Ok(Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: hashes,
            config,
            config_sha256,
            outputs: Vec::new(),
        })
    }

    /// Writes the manifest for `output`: `manifest.json` inside an output
    /// directory, `<name>.manifest.json` next to an output file.
    pub fn write_for(mut self, output: &Path, outputs: &[&Path]) -> Result<PathBuf> {
        self.outputs = outputs.iter().map(|p| p.display().to_string()).collect();
        let path = if output.is_dir() {
            output.join("manifest.json")
        } else {
            let mut name = output
                .file_name()
                .map(|n| n.to_os_string())
                .unwrap_or_else(|| "output".into());
            name.push(".manifest.json");
            output.with_file_name(name)
        };
        let mut text = serde_json::to_string_pretty(&self)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directory_hash_tracks_content_and_names() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("a")).unwrap();
        fs::write(dir.path().join("a/x.tsv"), "one\t1\n").unwrap();
        let h1 = hash_path(dir.path()).unwrap();
        assert_eq!(h1, hash_path(dir.path()).unwrap());
        fs::write(dir.path().join("a/x.tsv"), "one\t2\n").unwrap();
        assert_ne!(h1, hash_path(dir.path()).unwrap());
    }

    #[test]
    fn empty_file_hash() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("e");
        fs::write(&f, "").unwrap();
        assert_eq!(
            hash_path(&f).unwrap(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
