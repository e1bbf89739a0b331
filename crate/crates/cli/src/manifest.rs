//! Writes a run's data files and its `run-manifest.json` sidecar. The
//! manifest is the only artifact carrying a timestamp.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use afmtj_core::config::to_json;
use afmtj_core::io::write_string_atomic;
use afmtj_core::sweep::TableFormat;
use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::commands::{Output, Subcommand};

pub const MANIFEST_NAME: &str = "run-manifest.json";

fn hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
pub struct FileHash {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub config: String,
    pub config_sha256: String,
    /// Hash over the config and every input file it pulled in.
    pub params_sha256: String,
    pub inputs: Vec<FileHash>,
    pub seed: u64,
    pub format: TableFormat,
    pub jobs: usize,
    pub outputs: Vec<FileHash>,
    pub created_unix_s: u64,
}

pub struct RunInfo<'a> {
    pub cmd: Subcommand,
    pub config: &'a Path,
    pub seed: u64,
    pub format: TableFormat,
    pub jobs: usize,
}

/// Writes every data file atomically, then the manifest. Returns the paths
/// written, manifest last.
pub fn emit(out_dir: &Path, output: &Output, run: &RunInfo<'_>) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for (name, body) in &output.files {
        let p = out_dir.join(name);
        write_string_atomic(&p, body)?;
        written.push(p);
    }
    let config_bytes = std::fs::read(run.config).with_context(|| format!("reading {}", run.config.display()))?;
    let mut params = Sha256::new();
    params.update(&config_bytes);
    let mut inputs = Vec::new();
    for p in &output.inputs {
        let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
        params.update(&bytes);
        inputs.push(FileHash { file: p.display().to_string(), sha256: hex(&bytes) });
    }
    let m = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        subcommand: run.cmd.name(),
        config: run.config.display().to_string(),
        config_sha256: hex(&config_bytes),
        params_sha256: format!("{:x}", params.finalize()),
        inputs,
        seed: run.seed,
        format: run.format,
        jobs: run.jobs,
        outputs: output
            .files
            .iter()
            .map(|(name, body)| FileHash { file: name.clone(), sha256: hex(body.as_bytes()) })
            .collect(),
        created_unix_s: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let p = out_dir.join(MANIFEST_NAME);
    write_string_atomic(&p, &to_json(&m))?;
    written.push(p);
    Ok(written)
}
