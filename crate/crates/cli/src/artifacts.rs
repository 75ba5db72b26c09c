//! Run directories and their manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Runtime(format!("serializing output: {e}")))
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct Manifest<'a, S: Serialize> {
    tool: &'static str,
    cli_version: &'static str,
    library_version: &'static str,
    command: &'a str,
    settings: &'a S,
    seeds: &'a BTreeMap<String, u64>,
    files: Vec<FileEntry>,
}

/// Output directory that remembers what was written to it.
pub struct RunDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl RunDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", root.display())))?;
        Ok(RunDir { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> CliResult<()> {
        let bytes = contents.as_ref();
        let path = self.path(name);
        fs::write(&path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileEntry { name: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    /// Writes `manifest.json` listing settings, derived seeds and the hash of
    /// every file written so far.
    pub fn finish<S: Serialize>(self, command: &str, settings: &S, seeds: &BTreeMap<String, u64>) -> CliResult<()> {
        let mut dir = RunDir { root: self.root, files: Vec::new() };
        let manifest = Manifest {
            tool: "wabc",
            cli_version: env!("CARGO_PKG_VERSION"),
            library_version: wabc::VERSION,
            command,
            settings,
            seeds,
            files: self.files,
        };
        dir.write("manifest.json", to_json(&manifest)?)
    }
}
