//! Output directory: manifests, hashed CSV tables, disk checks.

use std::fs;
use std::path::{Path, PathBuf};

use anismhd::io::write_atomic;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const HASH_PREFIX: &str = "# manifest_sha256=";

pub struct Output {
    dir: PathBuf,
    hash: String,
}

impl Output {
    /// Create `dir` and write `<command>.manifest.json`; its hash tags every table.
    pub fn create(dir: &Path, command: &str, manifest: &serde_json::Value) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let mut bytes = serde_json::to_vec_pretty(manifest)?;
        bytes.push(b'\n');
        write_atomic(&dir.join(format!("{command}.manifest.json")), &bytes)?;
        let hash = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        Ok(Output { dir: dir.to_path_buf(), hash })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn csv<I>(&self, name: &str, header: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut buf = format!("{HASH_PREFIX}{}\n", self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for r in rows {
                w.write_record(&r)?;
            }
            w.flush()?;
        }
        let path = self.path(name);
        write_atomic(&path, &buf)?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        let path = self.path(name);
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

/// A CSV table with its manifest hash.
pub struct Table {
    pub hash: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path)?;
    let bad = |reason: &str| CliError::Trajectory { path: path.to_path_buf(), reason: reason.into() };
    let (first, rest) = text.split_once('\n').ok_or_else(|| bad("empty table"))?;
    let hash = first.strip_prefix(HASH_PREFIX).ok_or_else(|| bad("missing manifest hash line"))?.trim().to_string();
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok(Table { hash, header, rows })
}

/// Refuse to start when `needed` bytes will not fit under `dir`.
pub fn check_disk(dir: &Path, needed: u64) -> Result<()> {
    fs::create_dir_all(dir)?;
    let available = fs4::available_space(dir)?;
    if needed > available {
        return Err(anismhd::Error::DiskSpace { needed, available }.into());
    }
    Ok(())
}

/// Shortest round-trip form, in exponent notation for very small or large values.
pub fn fmt(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-4..1e6).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
