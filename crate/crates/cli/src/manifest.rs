//! Run manifests: every command writes one next to its outputs with enough
//! information to reproduce the run bit-for-bit.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub threads: usize,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    /// Full effective configuration of the run.
    pub config: serde_json::Value,
    pub wall_clock_ms: u128,
}

pub struct ManifestBuilder {
    command: String,
    seed: Option<u64>,
    threads: usize,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    config: serde_json::Value,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: Option<u64>, threads: usize) -> Self {
        Self {
            command: command.to_string(),
            seed,
            threads,
            inputs: Vec::new(),
            outputs: Vec::new(),
            config: serde_json::Value::Null,
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, p: &Path) -> &mut Self {
        self.inputs.push(p.to_path_buf());
        self
    }

    pub fn output(&mut self, p: &Path) -> &mut Self {
        self.outputs.push(p.to_path_buf());
        self
    }

    pub fn config<T: Serialize>(&mut self, cfg: &T) -> anyhow::Result<&mut Self> {
        self.config = serde_json::to_value(cfg)?;
        Ok(self)
    }

    /// Writes `run_manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let manifest = RunManifest {
            command: self.command.clone(),
            argv: std::env::args().collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            threads: self.threads,
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            config: self.config.clone(),
            wall_clock_ms: self.started.elapsed().as_millis(),
        };
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("run_manifest.json"),
            serde_json::to_vec_pretty(&manifest)?,
        )?;
        Ok(())
    }
}
