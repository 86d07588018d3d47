use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{Classify, CliResult};

/// A named input file and its content digest.
#[derive(Clone, Debug, Serialize)]
pub struct InputRecord {
    pub file_name: String,
    pub sha256: String,
}

/// Collects everything a run depends on and names its output directory after the
/// digest, so identical inputs and settings land in the same place.
pub struct Stamp {
    command: &'static str,
    hasher: Sha256,
    inputs: BTreeMap<String, InputRecord>,
}

impl Stamp {
    pub fn new(command: &'static str, config: &RunConfig) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        hasher.update(serde_json::to_vec(&config.portable()).expect("config serializes"));
        Self {
            command,
            hasher,
            inputs: BTreeMap::new(),
        }
    }

    /// Reads and digests one input file.
    pub fn file(&mut self, role: &str, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = std::fs::read(path).input(|| format!("reading {role} {}", path.display()))?;
        let digest = hex::encode(Sha256::digest(&bytes));
        self.hasher.update(role.as_bytes());
        self.hasher.update(digest.as_bytes());
        self.inputs.insert(
            role.to_string(),
            InputRecord {
                file_name: path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                sha256: digest,
            },
        );
        Ok(bytes)
    }

    /// Digests every regular file directly under `dir` whose name starts with `prefix`,
    /// in name order, and returns their paths.
    pub fn dir(&mut self, role: &str, dir: &Path, prefix: &str) -> CliResult<Vec<PathBuf>> {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .input(|| format!("reading {role} directory {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file() && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with(prefix)))
            .collect();
        paths.sort();
        for p in &paths {
            let name = p.file_name().expect("file").to_string_lossy().into_owned();
            self.file(&format!("{role}/{name}"), p)?;
        }
        Ok(paths)
    }

    /// Creates `<output_dir>/<command>-<digest prefix>` and records the config and
    /// inputs in it.
    pub fn create(self, config: &RunConfig) -> CliResult<RunDir> {
        let digest = hex::encode(self.hasher.finalize());
        let path = config.output_dir.join(format!("{}-{}", self.command, &digest[..12]));
        std::fs::create_dir_all(&path).input(|| format!("creating {}", path.display()))?;
        let dir = RunDir { path };
        dir.write_json("config.json", &config.portable())?;
        dir.write_json("inputs.json", &self.inputs)?;
        Ok(dir)
    }
}

pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write(&self, name: &str, bytes: impl AsRef<[u8]>) -> CliResult<()> {
        let p = self.file(name);
        std::fs::write(&p, bytes).input(|| format!("writing {}", p.display()))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write(name, text)
    }
}
