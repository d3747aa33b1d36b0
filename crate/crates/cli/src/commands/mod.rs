pub mod analyze;
pub mod kernels;
pub mod linear;
pub mod report;
pub mod run;

use serde::Serialize;
use serde_json::json;

use crate::config::Campaign;

/// One configured pass/fail check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, detail: detail.into() }
    }
}

/// Manifest skeleton shared by every command. The output path is left out so
/// identical campaigns written to different directories hash identically.
pub fn manifest(command: &str, c: &Campaign, section: serde_json::Value) -> serde_json::Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "campaign": c.name,
        "system": c.system,
        "seed": c.seed,
        "grid": c.grid,
        "config": section,
    })
}
