use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use roofline_core::io::write_json;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use walkdir::WalkDir;

use crate::error::CliError;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Sidecar written next to every output so a run can be reproduced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub subcommand: String,
    pub config: Value,
    /// sha256 of each input file; directories hash their files in path order.
    pub inputs: BTreeMap<String, String>,
    pub seeds: BTreeMap<String, u64>,
    pub outputs: Vec<String>,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: Value) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            config,
            inputs: BTreeMap::new(),
            seeds: BTreeMap::new(),
            outputs: Vec::new(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self, CliError> {
        self.inputs.insert(path.display().to_string(), hash_path(path)?);
        Ok(self)
    }

    pub fn seed(&mut self, name: &str, value: u64) -> &mut Self {
        self.seeds.insert(name.to_string(), value);
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.display().to_string());
        self
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        Ok(write_json(path, self)?)
    }
}

/// `<file>.manifest.json` next to a file output.
pub fn sidecar_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn hash_file(path: &Path, hasher: &mut Sha256) -> Result<(), CliError> {
    let mut f = std::fs::File::open(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = f
            .read(&mut buf)
            .map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
        if n == 0 {
            return Ok(());
        }
        hasher.update(&buf[..n]);
    }
}

pub fn hash_path(path: &Path) -> Result<String, CliError> {
    let mut hasher = Sha256::new();
    if path.is_dir() {
        let mut files: Vec<PathBuf> = WalkDir::new(path)
            .into_iter()
            .filter_map(Result::ok)
            .filter(|e| e.file_type().is_file())
            .map(|e| e.into_path())
            .collect();
        files.sort();
        for f in files {
            let rel = f.strip_prefix(path).unwrap_or(&f);
            hasher.update(rel.to_string_lossy().as_bytes());
            hasher.update([0]);
            hash_file(&f, &mut hasher)?;
        }
    } else {
        hash_file(path, &mut hasher)?;
    }
    Ok(hex::encode(hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashes_files_and_directories() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.txt"), "abc").unwrap();
        assert_eq!(
            hash_path(&dir.path().join("a.txt")).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let before = hash_path(dir.path()).unwrap();
        std::fs::write(dir.path().join("b.txt"), "x").unwrap();
        assert_ne!(before, hash_path(dir.path()).unwrap());
        assert!(hash_path(&dir.path().join("missing")).is_err());
        assert_eq!(
            sidecar_for(Path::new("out/d.json")),
            Path::new("out/d.json.manifest.json")
        );
    }
}
