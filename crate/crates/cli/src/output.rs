//! Shared output plumbing: reproducibility stanza, seeds and report files.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use satlab::format::{sort_rows, ReportRow};

use crate::failure::{self, Failure};

pub const REPORT_FILE: &str = "report.json";
pub const SEED_ENV: &str = "SATLAB_SEED";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reproducibility {
    pub seed: Option<u64>,
    /// SHA-256 of the config file, or of the canonical arguments when there is none.
    pub config_sha256: String,
    pub version: String,
}

impl Reproducibility {
    pub fn new(seed: Option<u64>, hashed: &[u8]) -> Self {
        Self {
            seed,
            config_sha256: sha256_hex(hashed),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// The `report.json` every writing subcommand leaves behind; `report` merges these.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    pub reproducibility: Reproducibility,
    pub rows: Vec<ReportRow>,
}

impl RunReport {
    pub fn new(run_id: impl Into<String>, reproducibility: Reproducibility, mut rows: Vec<ReportRow>) -> Result<Self, Failure> {
        for r in &rows {
            r.validate().map_err(failure::numeric)?;
        }
        sort_rows(&mut rows);
        Ok(Self {
            run_id: run_id.into(),
            reproducibility,
            rows,
        })
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Flag, then config, then `SATLAB_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, config: Option<u64>) -> Result<u64, Failure> {
    if let Some(s) = flag.or(config) {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| failure::usage(anyhow::anyhow!("{SEED_ENV} must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

pub fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(failure::data)
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("report values serialize");
    bytes.push(b'\n');
    bytes
}

/// Collects files and writes them only once every output has been computed.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: impl Into<PathBuf>, value: &T) {
        self.add(name, to_json(value));
    }

    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))
            .map_err(failure::data)?;
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes)
                .with_context(|| format!("cannot write {}", path.display()))
                .map_err(failure::data)?;
        }
        Ok(())
    }
}

pub fn print_bytes(bytes: &[u8]) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(bytes);
    let _ = out.flush();
}
