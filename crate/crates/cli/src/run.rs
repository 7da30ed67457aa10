//! Output bookkeeping: every file a run writes is recorded, removed again if the run
//! fails, and listed in the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::CliError;

pub struct Run {
    pub out_dir: PathBuf,
    /// Directory that relative input paths in the config refer to.
    pub base_dir: PathBuf,
    pub quiet: bool,
    pub seed: u64,
    written: Vec<String>,
}

#[derive(Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub config_sha256: String,
    pub seed: u64,
    pub started_utc: String,
    pub finished_utc: String,
    pub status: &'static str,
    pub exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub outputs: Vec<String>,
}

/// Hash of the effective config. The output directory is left out so that reruns into
/// different directories can be compared.
pub fn config_hash(cfg: &ScenarioConfig) -> String {
    let mut cfg = cfg.clone();
    cfg.out_dir = None;
    let bytes = serde_json::to_vec(&cfg).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

impl Run {
    pub fn new(out_dir: PathBuf, base_dir: PathBuf, quiet: bool, seed: u64) -> Self {
        Run {
            out_dir,
            base_dir,
            quiet,
            seed,
            written: Vec::new(),
        }
    }

    pub fn resolve_input(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        if self.written.iter().any(|w| w == name) {
            return Err(CliError::Runtime(format!("output {name} written twice")));
        }
        let path = self.out_dir.join(name);
        // Record before writing so a partial file is still cleaned up.
        self.written.push(name.to_string());
        fs::write(&path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(CliError::runtime)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            use std::io::Write;
            // A closed pipe (e.g. `| head`) should not abort the run.
            let _ = writeln!(std::io::stdout(), "{}", line.as_ref());
        }
    }

    pub fn outputs(&self) -> &[String] {
        &self.written
    }

    pub fn discard_outputs(&mut self) {
        for name in self.written.drain(..) {
            let _ = fs::remove_file(self.out_dir.join(name));
        }
    }
}
