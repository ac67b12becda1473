//! Deterministic report emission.
//!
//! The report body (stdout or the `--out` file) depends only on the resolved
//! config and seed, so re-running a command yields byte-identical bodies. The
//! wall-clock timestamp lives in a `<out>.meta.json` sidecar together with
//! the library version and the fully resolved config.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::RunConfig;

#[derive(Serialize)]
struct Meta<'a> {
    library_version: &'a str,
    timestamp_unix_ms: u128,
    config: &'a RunConfig,
}

pub struct ReportSink {
    out: Option<PathBuf>,
}

impl ReportSink {
    pub fn new(out: Option<PathBuf>) -> Self {
        ReportSink { out }
    }

    /// Writes the deterministic body, plus the metadata sidecar when writing
    /// to a file.
    pub fn emit(&self, body: &str, config: &RunConfig) -> std::io::Result<()> {
        match &self.out {
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(body.as_bytes())?;
                if !body.ends_with('\n') {
                    stdout.write_all(b"\n")?;
                }
                Ok(())
            }
            Some(path) => {
                if let Some(dir) = path.parent() {
                    if !dir.as_os_str().is_empty() {
                        fs::create_dir_all(dir)?;
                    }
                }
                fs::write(path, body)?;
                let meta = Meta {
                    library_version: env!("CARGO_PKG_VERSION"),
                    timestamp_unix_ms: SystemTime::now()
                        .duration_since(UNIX_EPOCH)
                        .map(|d| d.as_millis())
                        .unwrap_or(0),
                    config,
                };
                let meta_path = sidecar_path(path);
                fs::write(meta_path, serde_json::to_string_pretty(&meta).unwrap())?;
                Ok(())
            }
        }
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Fixed-precision float formatting for CSV bodies: round-trip exact and
/// deterministic across runs.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.17e}")
}
