//! Deterministic CSV/JSON writers. Floats are printed with Rust's shortest
//! round-trip formatting, so identical runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Stanza attached to every JSON output so a result can be traced back to
/// the exact configuration and binary that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub version: &'static str,
    pub command: &'static str,
}

impl Provenance {
    pub fn new(config_sha256: String, command: &'static str) -> Self {
        Provenance { config_sha256, version: env!("CARGO_PKG_VERSION"), command }
    }
}

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write a CSV file from a header and column-per-entry rows.
    pub fn write_csv(
        &self,
        name: &str,
        header: &str,
        rows: impl Iterator<Item = Vec<f64>>,
    ) -> Result<PathBuf, CliError> {
        let mut text = String::from(header);
        text.push('\n');
        for row in rows {
            let mut first = true;
            for v in row {
                if !first {
                    text.push(',');
                }
                text.push_str(&format!("{v}"));
                first = false;
            }
            text.push('\n');
        }
        let path = self.path(name);
        fs::write(&path, text)?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Io(format!("json serialization: {e}")))?;
        let path = self.path(name);
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}
