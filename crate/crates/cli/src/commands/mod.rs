pub mod detect;
pub mod evaluate;
pub mod report;
pub mod synth;

use std::path::{Path, PathBuf};

use anyhow::anyhow;
use symwatch::outlier::DetectionRun;
use symwatch::panel::{AreaSet, EpiKind, EpiSeries, KeywordRegistry, QueryPanel};

use crate::error::{Classify, CliError, CliResult};
use crate::output::Stamp;

pub(crate) fn required<'a>(path: &'a Option<PathBuf>, flag: &str, command: &str) -> CliResult<&'a Path> {
    path.as_deref()
        .ok_or_else(|| CliError::Config(anyhow!("{command} needs --{flag} (or \"{flag}\" in the config file)")))
}

pub(crate) fn load_panel(stamp: &mut Stamp, path: &Path, registry: &KeywordRegistry) -> CliResult<QueryPanel> {
    let bytes = stamp.file("panel", path)?;
    QueryPanel::read_csv(bytes.as_slice(), registry.clone()).input(|| format!("loading panel {}", path.display()))
}

pub(crate) fn load_areas(stamp: &mut Stamp, path: &Path) -> CliResult<AreaSet> {
    let bytes = stamp.file("areas", path)?;
    AreaSet::read_csv(bytes.as_slice()).input(|| format!("loading areas {}", path.display()))
}

pub(crate) fn load_epi(stamp: &mut Stamp, role: &str, path: &Path, kind: EpiKind) -> CliResult<EpiSeries> {
    let bytes = stamp.file(role, path)?;
    EpiSeries::read_csv(bytes.as_slice(), kind).input(|| format!("loading {role} {}", path.display()))
}

/// Reads every `run-*.json` written by `detect`, in week order.
pub(crate) fn load_runs(stamp: &mut Stamp, dir: &Path) -> CliResult<Vec<DetectionRun>> {
    let paths: Vec<PathBuf> = stamp
        .dir("runs", dir, "run-")?
        .into_iter()
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    if paths.is_empty() {
        return Err(CliError::Input(anyhow!(
            "no detection runs (run-*.json) in {}",
            dir.display()
        )));
    }
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).input(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).input(|| format!("parsing {}", p.display()))
        })
        .collect()
}

pub(crate) fn warn(warnings: &mut Vec<String>, message: String) {
    eprintln!("warning: {message}");
    warnings.push(message);
}
