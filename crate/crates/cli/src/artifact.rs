//! Artifact collection and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct ArtifactRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub tool_version: String,
    pub threads: usize,
    pub artifacts: Vec<ArtifactRecord>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
    pub passed: bool,
}

/// In-memory artifacts; nothing touches the disk until [`Artifacts::write`].
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    timings: BTreeMap<String, f64>,
}

impl Artifacts {
    pub fn new() -> Self {
        Artifacts { files: Vec::new(), timings: BTreeMap::new() }
    }

    pub fn add(&mut self, name: &str, content: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), content.into()));
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        self.add(name, text);
    }

    /// Gnuplot-compatible two-column table.
    pub fn table(&mut self, name: &str, x_label: &str, y_label: &str, rows: impl IntoIterator<Item = (f64, f64)>) {
        let mut out = format!("# {x_label} {y_label}\n");
        for (x, y) in rows {
            let _ = writeln!(out, "{x:.17e} {y:.17e}");
        }
        self.add(name, out);
    }

    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.insert(phase.to_string(), start.elapsed().as_secs_f64());
        out
    }

    /// Writes every artifact and `manifest.json` into `dir`.
    pub fn write(self, dir: &Path, mut manifest: RunManifest) -> std::io::Result<RunManifest> {
        fs::create_dir_all(dir)?;
        for (name, content) in &self.files {
            fs::write(dir.join(name), content)?;
            manifest.artifacts.push(ArtifactRecord {
                name: name.clone(),
                sha256: hex::encode(Sha256::digest(content)),
                bytes: content.len(),
            });
        }
        manifest.timings = self.timings;
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(dir.join("manifest.json"), text + "\n")?;
        Ok(manifest)
    }
}
