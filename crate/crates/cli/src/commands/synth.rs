use anyhow::anyhow;
use symwatch::panel::KeywordRegistry;
use symwatch::synthgen::{generate, SynthError};

use crate::config::RunConfig;
use crate::error::{Classify, CliError, CliResult};
use crate::output::{RunDir, Stamp};

/// Generates a scenario and writes its panel, areas, cases, mortality and ground truth.
pub fn run(config: &RunConfig) -> CliResult<RunDir> {
    let scenario = config.scenario()?;
    scenario
        .validate(&KeywordRegistry::default())
        .config(|| "invalid scenario".to_string())?;
    let world = generate(&scenario).map_err(|e| match e {
        SynthError::InvalidScenario(_) | SynthError::Geography { .. } => {
            CliError::Config(anyhow!(e).context("invalid scenario"))
        }
        other => CliError::Input(anyhow!(other).context("generating scenario")),
    })?;
    let dir = Stamp::new("synth", config).create(config)?;
    world
        .write_dir(&dir.path)
        .input(|| format!("writing scenario files to {}", dir.path.display()))?;
    dir.write_json("scenario.json", &scenario)?;
    Ok(dir)
}
