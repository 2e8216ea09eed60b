use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Record of one successful run, written as `<out>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub version: String,
    pub config_digest: String,
    pub input_digests: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub wall_time_seconds: f64,
    pub finished: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Collects what a command read and what it is about to write.
pub struct RunRecorder {
    started: Instant,
    config_json: String,
    inputs: BTreeMap<String, String>,
}

impl RunRecorder {
    pub fn new() -> Self {
        RunRecorder {
            started: Instant::now(),
            config_json: String::new(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.insert(path.display().to_string(), sha256_hex(bytes));
    }

    pub fn config<T: Serialize>(&mut self, config: &T) {
        self.config_json = serde_json::to_string(config).unwrap_or_default();
    }

    pub fn finish(self, outputs: &[PathBuf]) -> RunManifest {
        RunManifest {
            command_line: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config_digest: sha256_hex(self.config_json.as_bytes()),
            input_digests: self.inputs,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            finished: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        }
    }
}
