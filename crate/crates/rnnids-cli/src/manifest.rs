//! Run manifests: every subcommand records its resolved invocation next to
//! its outputs so any run can be replayed byte-identically.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    /// The full argument vector after the program name.
    pub args: Vec<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
}

impl RunManifest {
    pub fn new(subcommand: &str, args: &[String]) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            args: args.to_vec(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seeds: BTreeMap::new(),
        }
    }

    pub fn input(mut self, path: &Path) -> Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn maybe_input(mut self, path: &Option<PathBuf>) -> Self {
        if let Some(p) = path {
            self.inputs.push(p.display().to_string());
        }
        self
    }

    pub fn output(mut self, path: &Path) -> Self {
        self.outputs.push(path.display().to_string());
        self
    }

    pub fn seed(mut self, name: &str, value: u64) -> Self {
        self.seeds.insert(name.to_string(), value);
        self
    }

    /// Writes the manifest next to the primary output: `<out>.manifest.json`
    /// for files, `<dir>/run_manifest.json` for directories.
    pub fn write_next_to(&self, primary: &Path) -> std::io::Result<()> {
        let path = if primary.is_dir() {
            primary.join("run_manifest.json")
        } else {
            manifest_path_for(primary)
        };
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, json)
    }
}

pub fn manifest_path_for(output: &Path) -> PathBuf {
    PathBuf::from(format!("{}.manifest.json", output.display()))
}

pub fn read_manifest(path: &Path) -> std::io::Result<RunManifest> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
}
