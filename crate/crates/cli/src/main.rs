//! `symwatch`: synthesize panels, run weekly detection, evaluate against case and
//! mortality series, and write reports.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{JumpRuleKind, Preset, RunConfig, OUTPUT_DIR_ENV};
use error::CliResult;

#[derive(Parser)]
#[command(name = "symwatch", version, about = "Search-query based regional outbreak detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario (panel, areas, cases, mortality, truth).
    Synth,
    /// Fit control models and score every consecutive week pair.
    Detect,
    /// Lag table, AUC-by-lag sweeps and weekly counters from detection runs.
    Evaluate,
    /// Markdown summary of detection runs and an optional evaluation.
    Report,
}

/// Flags override the config file; `SYMWATCH_OUTPUT_DIR` sits between the two for the
/// output directory.
#[derive(Args)]
struct Overrides {
    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    panel: Option<PathBuf>,
    #[arg(long, global = true)]
    areas: Option<PathBuf>,
    #[arg(long, global = true)]
    cases: Option<PathBuf>,
    #[arg(long, global = true)]
    mortality: Option<PathBuf>,
    /// Directory written by `detect`.
    #[arg(long, global = true)]
    runs: Option<PathBuf>,
    /// Directory written by `evaluate`.
    #[arg(long, global = true)]
    evaluation: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    preset: Option<Preset>,
    #[arg(long, global = true)]
    n_areas: Option<usize>,
    #[arg(long, global = true)]
    n_weeks: Option<usize>,
    #[arg(long, global = true)]
    min_area_users: Option<u64>,
    #[arg(long, global = true)]
    min_cell_users: Option<u64>,
    #[arg(long, global = true)]
    min_distance_km: Option<f64>,
    #[arg(long, global = true)]
    max_controls: Option<usize>,
    #[arg(long, global = true)]
    alert_percentile: Option<f64>,
    #[arg(long, global = true)]
    sd_multiplier: Option<f64>,
    #[arg(long, global = true)]
    ratio: Option<f64>,
    /// Composite keywords, e.g. `pyrexia,cough`.
    #[arg(long, global = true, value_delimiter = ',', num_args = 2)]
    keyword_pair: Option<Vec<String>>,
    #[arg(long, global = true, value_enum)]
    jump_rule: Option<JumpRuleKind>,
    /// Skip SVG output.
    #[arg(long, global = true)]
    no_plots: bool,
}

fn resolve(o: Overrides) -> CliResult<RunConfig> {
    let mut c = match &o.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
        c.output_dir = dir.into();
    }
    macro_rules! set {
        ($($field:ident).+ = $value:expr) => {
            if let Some(v) = $value {
                c.$($field).+ = v;
            }
        };
    }
    set!(output_dir = o.output_dir);
    set!(seed = o.seed);
    set!(preset = o.preset);
    set!(thresholds.min_area_users = o.min_area_users);
    set!(thresholds.min_cell_users = o.min_cell_users);
    set!(thresholds.min_distance_km = o.min_distance_km);
    set!(thresholds.max_controls = o.max_controls);
    set!(thresholds.alert_percentile = o.alert_percentile);
    set!(thresholds.sd_multiplier = o.sd_multiplier);
    set!(thresholds.ratio = o.ratio);
    set!(jump_rule = o.jump_rule);
    for (slot, v) in [
        (&mut c.panel, o.panel),
        (&mut c.areas, o.areas),
        (&mut c.cases, o.cases),
        (&mut c.mortality, o.mortality),
        (&mut c.runs, o.runs),
        (&mut c.evaluation, o.evaluation),
    ] {
        if v.is_some() {
            *slot = v;
        }
    }
    if let Some(pair) = o.keyword_pair {
        let [a, b]: [String; 2] = pair.try_into().expect("clap enforces two values");
        c.keyword_pair = [a, b];
    }
    if o.no_plots {
        c.plots = false;
    }
    for (key, v) in [("n_areas", o.n_areas), ("n_weeks", o.n_weeks)] {
        if let Some(v) = v {
            let s = c.scenario.get_or_insert_with(|| serde_json::json!({}));
            if let Some(obj) = s.as_object_mut() {
                obj.insert(key.into(), v.into());
            }
        }
    }
    Ok(c)
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    let config = resolve(cli.overrides)?;
    let dir = match cli.command {
        Command::Synth => commands::synth::run(&config)?,
        Command::Detect => commands::detect::run(&config)?,
        Command::Evaluate => commands::evaluate::run(&config)?,
        Command::Report => commands::report::run(&config)?,
    };
    Ok(dir.path)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
