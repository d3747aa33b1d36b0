use std::fs;
use std::path::Path;

use anismhd::io::write_atomic;
use serde_json::json;
use sha2::{Digest, Sha256};

use super::Check;
use crate::error::{CliError, Result};
use crate::output::read_csv;

/// Result tables and the manifests they must link to.
const TABLES: [(&str, &str); 4] = [
    ("kernel_fits.csv", "kernels.manifest.json"),
    ("linear_fits.csv", "linear.manifest.json"),
    ("duhamel_gaps.csv", "duhamel.manifest.json"),
    ("rates.csv", "asympt.manifest.json"),
];

/// Collect every result table under `dir` into one pass/fail summary.
pub fn run(dir: &Path) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut tables = Vec::new();
    for (table, manifest) in TABLES {
        let path = dir.join(table);
        if !path.exists() {
            continue;
        }
        let t = read_csv(&path)?;
        let expected: String = match fs::read(dir.join(manifest)) {
            Ok(b) => Sha256::digest(&b).iter().map(|x| format!("{x:02x}")).collect(),
            Err(_) => String::new(),
        };
        if t.hash != expected {
            checks.push(Check::new(table, false, format!("table does not match {manifest}")));
        }
        let col = t.column("result").ok_or_else(|| CliError::Config(format!("{table} has no result column")))?;
        let count = |s: &str| t.rows.iter().filter(|r| r[col] == s).count();
        let failed = count("FAIL");
        checks.push(Check::new(
            table,
            failed == 0,
            format!("{} rows: {} pass, {failed} fail, {} trivial", t.rows.len(), count("PASS"), count("TRIVIAL")),
        ));
        tables.push(json!({ "table": table, "manifest_sha256": t.hash, "rows": t.rows.len(), "failed": failed }));
    }
    if tables.is_empty() {
        return Err(CliError::Config(format!("no result tables in {}", dir.display())));
    }
    let mut bytes = serde_json::to_vec_pretty(&json!({ "tables": tables, "checks": checks }))?;
    bytes.push(b'\n');
    write_atomic(&dir.join("report.json"), &bytes)?;
    Ok(checks)
}
