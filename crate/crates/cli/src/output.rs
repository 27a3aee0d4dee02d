//! Result files and their metadata sidecars.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

/// `<out>.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// SHA-256 of the canonical (sorted-key) serialization of the resolved config.
pub fn config_hash(config: &Value) -> String {
    let canonical = serde_json::to_string(config).expect("json values serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

pub struct Run {
    pub command: &'static str,
    pub config: Value,
    pub workers: usize,
    pub started: Instant,
}

impl Run {
    fn metadata(&self) -> Value {
        json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config_hash": config_hash(&self.config),
            "config": self.config,
            "workers": self.workers,
            "timestamp": chrono::Utc::now().to_rfc3339(),
            "wall_time_seconds": self.started.elapsed().as_secs_f64(),
        })
    }

    /// Write `content` to `out` (plus sidecar) or to stdout.
    pub fn emit(&self, out: Option<&Path>, content: &str) -> Result<()> {
        match out {
            Some(path) => {
                std::fs::write(path, content)
                    .with_context(|| format!("writing {}", path.display()))?;
                let meta = serde_json::to_string_pretty(&self.metadata())? + "\n";
                let side = sidecar_path(path);
                std::fs::write(&side, meta)
                    .with_context(|| format!("writing {}", side.display()))?;
            }
            None => print!("{content}"),
        }
        Ok(())
    }
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

pub fn json_text(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("records serialize") + "\n"
}
