use std::fmt::Write;

use symwatch::panel::KeywordRegistry;

use super::evaluate::{coverage, coverage_svg, EvaluationSummary, OutcomeSummary};
use super::{load_runs, required};
use crate::config::RunConfig;
use crate::error::{Classify, CliResult};
use crate::output::{RunDir, Stamp};

/// Markdown summary of detection runs and, when given, an evaluation directory.
pub fn run(config: &RunConfig) -> CliResult<RunDir> {
    config.validate(&KeywordRegistry::default())?;
    let mut stamp = Stamp::new("report", config);
    let runs = load_runs(&mut stamp, required(&config.runs, "runs", "report")?)?;
    let summary: Option<EvaluationSummary> = match &config.evaluation {
        Some(dir) => {
            let path = dir.join("summary.json");
            let bytes = stamp.file("evaluation", &path)?;
            Some(serde_json::from_slice(&bytes).input(|| format!("parsing {}", path.display()))?)
        }
        None => None,
    };

    let mut md = String::new();
    let _ = writeln!(md, "# symwatch report\n");
    let _ = writeln!(
        md,
        "{} week pair(s), predicting {} to {}.\n",
        runs.len(),
        runs[0].week_predicted,
        runs[runs.len() - 1].week_predicted
    );
    let _ = writeln!(md, "## Weekly detection\n");
    let _ = writeln!(md, "| predicted week | areas | alerts | threshold | top composite |");
    let _ = writeln!(md, "|---|---|---|---|---|");
    for r in &runs {
        let top = r
            .frame
            .composite
            .iter()
            .max_by(|a, b| a.1.value.total_cmp(&b.1.value).then_with(|| b.0.cmp(a.0)))
            .map_or_else(|| "-".to_string(), |(a, c)| format!("{a} ({:.2})", c.value));
        let _ = writeln!(
            md,
            "| {} | {} | {} | {:.3} | {} |",
            r.week_predicted,
            r.alerts.n_areas_covered,
            r.alerts.alerts.len(),
            r.alerts.threshold,
            top
        );
    }

    let _ = writeln!(md, "\n## Alerts\n");
    let mut any = false;
    for r in &runs {
        for a in &r.alerts.alerts {
            any = true;
            let flag = if a.both_negative { " (both negative)" } else { "" };
            let _ = writeln!(
                md,
                "- {} {}: composite {:.3}{flag}",
                r.week_predicted, a.area_id, a.composite
            );
        }
    }
    if !any {
        let _ = writeln!(md, "None.");
    }

    if let Some(s) = &summary {
        let _ = writeln!(md, "\n## Evaluation\n");
        for (name, o) in [("Cases", &s.cases), ("Mortality", &s.mortality)] {
            match o {
                Some(o) => {
                    let _ = writeln!(md, "- {name}: {}", describe(o));
                }
                None => {
                    let _ = writeln!(md, "- {name}: not evaluated");
                }
            }
        }
        for w in &s.warnings {
            let _ = writeln!(md, "- warning: {w}");
        }
    }

    let dir = stamp.create(config)?;
    dir.write("report.md", md)?;
    if config.plots {
        dir.write(
            "coverage.svg",
            coverage_svg(&coverage(&runs, None, config.thresholds.ratio)),
        )?;
    }
    Ok(dir)
}

fn describe(o: &OutcomeSummary) -> String {
    match (o.peak_lag_weeks, o.peak_auc) {
        (Some(lag), Some(auc)) => format!(
            "peak AUC {auc:.3} at lag {lag} week(s); {} of {} labeled windows positive",
            o.n_positive, o.n_labeled
        ),
        _ => format!(
            "AUC undefined at every lag; {} of {} labeled windows positive",
            o.n_positive, o.n_labeled
        ),
    }
}
