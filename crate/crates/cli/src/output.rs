//! Output files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use bandit_attack::{Error, ExperimentConfig, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance record written next to every set of outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub timestamp: String,
    pub config_path: PathBuf,
    /// Effective configuration after command-line overrides.
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepEcho>,
    pub outputs: Vec<OutputEntry>,
}

#[derive(Debug, Serialize)]
pub struct SweepEcho {
    pub key: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub path: PathBuf,
    pub sha256: String,
}

/// Collects output files as they are written into one directory.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<OutputEntry>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, file: &str, body: &str) -> Result<()> {
        let path = self.dir.join(file);
        fs::write(&path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.written.push(OutputEntry {
            file: file.to_string(),
            path,
            sha256: hex::encode(Sha256::digest(body.as_bytes())),
        });
        Ok(())
    }

    /// Writes `manifest.json` describing everything written so far.
    pub fn finish(
        mut self,
        command: &str,
        config_path: &Path,
        config: ExperimentConfig,
        sweep: Option<SweepEcho>,
    ) -> Result<()> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            config_path: config_path.to_path_buf(),
            config,
            sweep,
            outputs: std::mem::take(&mut self.written),
        };
        let mut body =
            serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
        body.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digests_match_written_bytes() {
        let tmp = tempfile::TempDir::new().unwrap();
        let mut out = OutputDir::create(&tmp.path().join("nested/dir")).unwrap();
        out.write("a.csv", "x,y\n1,2\n").unwrap();
        assert_eq!(out.written.len(), 1);
        // sha256 of "x,y\n1,2\n"
        let expected = hex::encode(Sha256::digest(b"x,y\n1,2\n"));
        assert_eq!(out.written[0].sha256, expected);
        assert_eq!(fs::read_to_string(&out.written[0].path).unwrap(), "x,y\n1,2\n");
    }
}
