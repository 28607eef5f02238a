use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

impl Artifact {
    pub fn of(path: &Path) -> CliResult<Self> {
        let data = fs::read(path).map_err(|e| CliError::file(path, e))?;
        Ok(Artifact {
            path: path.to_owned(),
            sha256: hex::encode(Sha256::digest(&data)),
            bytes: data.len() as u64,
        })
    }
}

/// Everything needed to rerun a command: its parameters, input and output
/// checksums, and how long each stage took.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub parameters: serde_json::Value,
    pub inputs: Vec<Artifact>,
    pub outputs: Vec<Artifact>,
    pub timings_ms: BTreeMap<String, f64>,
    pub stats: BTreeMap<String, serde_json::Value>,
    #[serde(skip)]
    clock: Option<(String, Instant)>,
}

impl RunManifest {
    pub fn new<P: Serialize>(command: &'static str, parameters: &P) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            parameters: serde_json::to_value(parameters).unwrap_or(serde_json::Value::Null),
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings_ms: BTreeMap::new(),
            stats: BTreeMap::new(),
            clock: None,
        }
    }

    /// Start timing `stage`, closing whichever stage was running.
    pub fn stage(&mut self, stage: &str) {
        self.finish_stage();
        self.clock = Some((stage.to_owned(), Instant::now()));
    }

    fn finish_stage(&mut self) {
        if let Some((name, t)) = self.clock.take() {
            self.timings_ms.insert(name, t.elapsed().as_secs_f64() * 1e3);
        }
    }

    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        self.inputs.push(Artifact::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> CliResult<()> {
        self.outputs.push(Artifact::of(path)?);
        Ok(())
    }

    pub fn stat<V: Serialize>(&mut self, key: &str, value: V) {
        if let Ok(v) = serde_json::to_value(value) {
            self.stats.insert(key.to_owned(), v);
        }
    }

    pub fn write(mut self, dir: &Path) -> CliResult<PathBuf> {
        self.finish_stage();
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self).map_err(homodiff::Error::from)?;
        fs::write(&path, text + "\n").map_err(|e| CliError::file(&path, e))?;
        Ok(path)
    }
}
