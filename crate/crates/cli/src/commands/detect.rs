use anyhow::anyhow;
use symwatch::matching::MatchingError;
use symwatch::outlier::{run_all_weeks, write_alerts_csv, OutlierError};
use symwatch::panel::{EpiKind, KeywordRegistry};

use super::{load_areas, load_epi, load_panel, required, warn};
use crate::config::RunConfig;
use crate::error::{Classify, CliError, CliResult};
use crate::output::{RunDir, Stamp};

/// Runs detection over every consecutive week pair of the suppressed panel.
pub fn run(config: &RunConfig) -> CliResult<RunDir> {
    let registry = KeywordRegistry::default();
    config.validate(&registry)?;
    let detect = config.detect_config(&registry)?;
    let mut stamp = Stamp::new("detect", config);
    let panel = load_panel(&mut stamp, required(&config.panel, "panel", "detect")?, &registry)?;
    let areas = load_areas(&mut stamp, required(&config.areas, "areas", "detect")?)?;
    let cases = match &config.cases {
        Some(p) => Some(load_epi(&mut stamp, "cases", p, EpiKind::DailyCases)?.window_counts(true)),
        None => None,
    };

    let fractions = panel.apply_suppression(&config.suppression()).to_fractions();
    let results = run_all_weeks(&fractions, &areas, cases.as_ref(), &detect);
    if results.is_empty() {
        return Err(CliError::Degenerate(
            "no analyzable week pairs: the panel has no two consecutive weeks with data after suppression".into(),
        ));
    }

    let mut warnings = Vec::new();
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for (week, res) in results {
        match res {
            Ok(run) => {
                if run.counters.n_coverage_lost > 0 {
                    warn(
                        &mut warnings,
                        format!(
                            "week {}: coverage lost for {} area(s) modeled on {}",
                            run.week_predicted, run.counters.n_coverage_lost, run.week_fitted
                        ),
                    );
                }
                if run.counters.n_unmodeled > 0 {
                    warn(
                        &mut warnings,
                        format!(
                            "week {}: {} area(s) without eligible controls",
                            week, run.counters.n_unmodeled
                        ),
                    );
                }
                runs.push(run);
            }
            Err(e) => {
                warn(&mut warnings, format!("week {week}: {e}"));
                failures.push(e);
            }
        }
    }
    if runs.is_empty() {
        let all_unmatched = failures
            .iter()
            .all(|e| matches!(e, OutlierError::Matching(MatchingError::NoEligibleCandidates { .. })));
        let first = failures.first().map(|e| e.to_string()).unwrap_or_default();
        return Err(CliError::Degenerate(if all_unmatched {
            format!("no eligible candidates in any week ({first})")
        } else {
            format!("no week pair could be analyzed ({first})")
        }));
    }

    let dir = stamp.create(config)?;
    let mut counters = csv::Writer::from_writer(Vec::new());
    let row = |w: &mut csv::Writer<Vec<u8>>, r: [String; 9]| w.write_record(r).map_err(|e| CliError::Input(anyhow!(e)));
    row(
        &mut counters,
        [
            "week_fitted",
            "week_predicted",
            "n_areas_with_data",
            "n_coverage_lost",
            "n_unmodeled",
            "n_over_2sd",
            "n_case_rises",
            "n_alerts",
            "threshold",
        ]
        .map(String::from),
    )?;
    for run in &runs {
        let week = run.week_fitted.to_string();
        dir.write_json(&format!("run-{week}.json"), run)?;
        let mut alerts = Vec::new();
        write_alerts_csv(&run.alerts, &mut alerts).input(|| "formatting alerts".to_string())?;
        dir.write(&format!("alerts-{week}.csv"), alerts)?;
        let c = &run.counters;
        row(
            &mut counters,
            [
                week,
                run.week_predicted.to_string(),
                c.n_areas_with_data.to_string(),
                c.n_coverage_lost.to_string(),
                c.n_unmodeled.to_string(),
                c.n_over_2sd.to_string(),
                c.n_case_rises.map_or_else(String::new, |n| n.to_string()),
                run.alerts.alerts.len().to_string(),
                run.alerts.threshold.to_string(),
            ],
        )?;
    }
    dir.write(
        "counters.csv",
        counters.into_inner().map_err(|e| CliError::Input(anyhow!("{e}")))?,
    )?;
    dir.write_json("warnings.json", &warnings)?;
    Ok(dir)
}
