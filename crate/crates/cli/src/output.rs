//! Input hashing, in-memory outputs and atomic writes.
//!
//! Commands build every output in memory first; nothing touches the output
//! directory until the command has succeeded. Each file is written to a
//! temporary sibling and renamed into place.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

fn sha256(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Files read by a command, with their digests.
#[derive(Debug, Default)]
pub struct Inputs {
    pub files: Vec<FileDigest>,
}

impl Inputs {
    pub fn read(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| CliError::input("io", format!("{}: {e}", path.display())))?;
        self.files.push(FileDigest { path: path.display().to_string(), sha256: sha256(&bytes), bytes: bytes.len() });
        Ok(bytes)
    }
}

/// Files a command produces, in write order.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    config: &'a Value,
    inputs: &'a [FileDigest],
    outputs: Vec<FileDigest>,
}

/// Everything needed to describe a run in its manifest.
pub struct Run<'a> {
    pub command: &'a str,
    pub seed: Option<u64>,
    pub config: Value,
    pub inputs: &'a Inputs,
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::input("io", format!("{}: {e}", dir.join(name).display()));
    let prefix = format!(".{name}.");
    let mut builder = tempfile::Builder::new();
    builder.prefix(&prefix);
    // Temp files default to owner-only; outputs are ordinary files.
    #[cfg(unix)]
    builder.permissions(std::os::unix::fs::PermissionsExt::from_mode(0o644));
    let mut tmp = builder.tempfile_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(dir.join(name)).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes the outputs and `manifest.json` into `dir`, creating it if needed.
/// Returns the paths written.
pub fn commit(dir: &Path, outputs: &Outputs, run: &Run) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::input("io", format!("{}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let mut digests = Vec::new();
    for (name, bytes) in &outputs.files {
        write_atomic(dir, name, bytes)?;
        digests.push(FileDigest { path: name.clone(), sha256: sha256(bytes), bytes: bytes.len() });
        written.push(dir.join(name));
    }
    let manifest = Manifest {
        tool: "costfolio",
        version: env!("CARGO_PKG_VERSION"),
        command: run.command,
        seed: run.seed,
        config: &run.config,
        inputs: &run.inputs.files,
        outputs: digests,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    write_atomic(dir, "manifest.json", &bytes)?;
    written.push(dir.join("manifest.json"));
    Ok(written)
}
