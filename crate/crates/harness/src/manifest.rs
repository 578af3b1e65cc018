//! Run manifests and artifact files.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    /// SHA-256 of the config file bytes; `None` for runs without a config.
    pub config_hash: Option<String>,
    pub seed: u64,
    pub workers: usize,
    pub parallel: bool,
    pub versions: BTreeMap<String, String>,
    pub wall_time_s: f64,
    pub status: String,
    pub error: Option<String>,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(experiment: &str, config_text: Option<&str>, seed: u64, workers: usize) -> Self {
        let versions = BTreeMap::from([
            ("singhyp".to_owned(), env!("CARGO_PKG_VERSION").to_owned()),
            ("singhyp-core".to_owned(), singhyp_core::VERSION.to_owned()),
        ]);
        Self {
            experiment: experiment.to_owned(),
            config_hash: config_text.map(config_hash),
            seed,
            workers,
            parallel: cfg!(feature = "parallel"),
            versions,
            wall_time_s: 0.0,
            status: "ok".into(),
            error: None,
            warnings: Vec::new(),
            outputs: Vec::new(),
        }
    }
}

pub fn config_hash(text: &str) -> String {
    format!("{:x}", Sha256::digest(text.as_bytes()))
}

/// Writes files under `dir`, creating it if needed, and returns the paths.
pub struct ArtifactWriter {
    dir: PathBuf,
    written: Vec<String>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_owned(),
            written: Vec::new(),
        })
    }

    pub fn text(&mut self, name: &str, contents: &str) -> io::Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        self.written.push(name.to_owned());
        Ok(())
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> io::Result<()> {
        let mut s = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
        s.push('\n');
        self.text(name, &s)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}
