use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub version: String,
    pub rng_seed: Option<u64>,
    pub duration_seconds: f64,
    /// Relative to `out`.
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// Writes to a temporary name and renames into place.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for name in &self.outputs {
            anyhow::ensure!(
                dir.join(name).is_file(),
                "declared output {name} is missing"
            );
        }
        let tmp = dir.join(format!(".{FILE_NAME}.tmp"));
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
        std::fs::rename(&tmp, dir.join(FILE_NAME)).context("publishing manifest")?;
        Ok(())
    }
}
