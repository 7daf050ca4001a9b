//! Output directories and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.txt";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files written by one command so the manifest can record
/// their digests. Nothing time- or host-dependent enters the manifest, so
/// equal inputs give byte-identical output directories.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<(String, String)>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.retain(|(n, _)| n != name);
        self.files.push((name.to_string(), sha256_hex(bytes)));
        Ok(path)
    }

    /// Renders into memory with `f`, then writes the bytes.
    pub fn write_with(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> rtmix_core::Result<()>) -> CliResult<PathBuf> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    /// Writes `manifest.txt` as `key = value` lines followed by one
    /// `file.<name> = sha256:<digest>` line per output, sorted by name.
    pub fn finish(mut self, entries: &[(&str, String)]) -> CliResult<PathBuf> {
        let mut text = Vec::new();
        let mut line = |k: &str, v: &str| writeln!(text, "{k} = {v}").expect("writing to memory");
        line("tool", "rtmix");
        line("version", env!("CARGO_PKG_VERSION"));
        line("core_version", rtmix_core::VERSION);
        for (k, v) in entries {
            line(k, v);
        }
        self.files.sort();
        for (name, digest) in &self.files {
            line(&format!("file.{name}"), &format!("sha256:{digest}"));
        }
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
