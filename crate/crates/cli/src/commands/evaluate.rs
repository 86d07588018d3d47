use std::collections::BTreeMap;

use anyhow::anyhow;
use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use symwatch::evaluation::{
    auc_vs_lag, label_jumps, median_lag_table, peak_lag, write_auc_csv, DailySearch, JumpLabels, JumpRule, LagAuc,
    ScoreMap,
};
use symwatch::outlier::{composite_scores, DetectionRun};
use symwatch::panel::{EpiKind, EpiSeries, KeywordRegistry};

use super::{load_epi, load_panel, load_runs, required, warn};
use crate::config::{RunConfig, WeekRange};
use crate::error::{Classify, CliError, CliResult};
use crate::output::{RunDir, Stamp};
use crate::svg::{line_chart, Series};

/// AUC sweep for one outcome series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub n_labeled: usize,
    pub n_positive: usize,
    pub peak_lag_weeks: Option<i64>,
    pub peak_auc: Option<f64>,
    pub sweep: Vec<LagAuc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub n_runs: usize,
    pub first_week: NaiveDate,
    pub last_week: NaiveDate,
    pub cases: Option<OutcomeSummary>,
    pub mortality: Option<OutcomeSummary>,
    pub warnings: Vec<String>,
}

/// Lag table, AUC sweeps against cases and mortality, and weekly coverage counters.
pub fn run(config: &RunConfig) -> CliResult<RunDir> {
    let registry = KeywordRegistry::default();
    config.validate(&registry)?;
    let mut stamp = Stamp::new("evaluate", config);
    let runs = load_runs(&mut stamp, required(&config.runs, "runs", "evaluate")?)?;
    let cases = match &config.cases {
        Some(p) => Some(load_epi(&mut stamp, "cases", p, EpiKind::DailyCases)?),
        None => None,
    };
    let deaths = match &config.mortality {
        Some(p) => Some(load_epi(&mut stamp, "mortality", p, EpiKind::WeeklyDeaths)?),
        None => None,
    };
    let panel = match &config.panel {
        Some(p) => Some(load_panel(&mut stamp, p, &registry)?),
        None => None,
    };

    let mut warnings = Vec::new();
    let scores = composite_scores(&runs);
    let rule = config.jump_rule();
    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();

    let mut outcome = |name: &str, series: &EpiSeries, lags: WeekRange, warnings: &mut Vec<String>| {
        let labels = label_jumps(&series.window_counts(true), &rule);
        let s = sweep(&scores, &labels, lags);
        if s.peak_auc.is_none() {
            warn(
                warnings,
                format!(
                    "{name}: no lag has both positive and negative labels ({} positive of {} labeled windows); AUC undefined",
                    s.n_positive, s.n_labeled
                ),
            );
        }
        let mut csv = Vec::new();
        write_auc_csv(&s.sweep, 7, &mut csv).map_err(|e| CliError::Input(anyhow!(e)))?;
        files.insert(format!("auc_{name}.csv"), csv);
        Ok::<_, CliError>(s)
    };
    let cases_summary = match &cases {
        Some(c) => Some(outcome("cases", c, config.case_lag_weeks, &mut warnings)?),
        None => None,
    };
    let mortality_summary = match &deaths {
        Some(d) => Some(outcome("mortality", d, config.mortality_lag_weeks, &mut warnings)?),
        None => None,
    };

    if let (Some(panel), Some(cases)) = (&panel, &cases) {
        let fractions = panel.apply_suppression(&config.suppression()).to_fractions();
        match DailySearch::from_weekly(&fractions) {
            Some(daily) => {
                let keywords: Vec<(usize, String)> = registry.names().into_iter().enumerate().collect();
                let table = median_lag_table(&daily, cases, &keywords, &config.correlation)
                    .input(|| "computing the lag table".to_string())?;
                for k in &table.omitted {
                    warn(
                        &mut warnings,
                        format!("lag table: no area with a valid correlation for {k:?}"),
                    );
                }
                let mut csv = Vec::new();
                table.write_csv(&mut csv).map_err(|e| CliError::Input(anyhow!(e)))?;
                files.insert("lag_table.csv".into(), csv);
            }
            None => warn(&mut warnings, "lag table: panel is empty after suppression".into()),
        }
    }

    let counters = coverage(&runs, cases.as_ref(), config.thresholds.ratio);
    files.insert("coverage.csv".into(), counters_csv(&counters)?);

    let dir = stamp.create(config)?;
    for (name, bytes) in &files {
        dir.write(name, bytes)?;
    }
    if config.plots {
        let mut series = Vec::new();
        for (name, s) in [("cases", &cases_summary), ("mortality", &mortality_summary)] {
            if let Some(s) = s {
                series.push(Series {
                    name: name.into(),
                    points: s.sweep.iter().map(|r| (r.lag_days as f64 / 7.0, r.auc)).collect(),
                });
            }
        }
        if !series.is_empty() {
            dir.write(
                "auc.svg",
                line_chart("Composite AUC by lag", "lag (weeks)", "AUC", &series, Some((0.0, 1.0))),
            )?;
        }
        dir.write("coverage.svg", coverage_svg(&counters))?;
    }
    dir.write_json(
        "summary.json",
        &EvaluationSummary {
            n_runs: runs.len(),
            first_week: runs.first().expect("non-empty").week_predicted.start(),
            last_week: runs.last().expect("non-empty").week_predicted.start(),
            cases: cases_summary,
            mortality: mortality_summary,
            warnings,
        },
    )?;
    Ok(dir)
}

fn sweep(scores: &ScoreMap, labels: &JumpLabels, lags: WeekRange) -> OutcomeSummary {
    let sweep = auc_vs_lag(scores, labels, lags.days());
    let peak = peak_lag(&sweep);
    OutcomeSummary {
        n_labeled: labels.labels.len(),
        n_positive: labels.n_positive(),
        peak_lag_weeks: peak.map(|p| p.lag_days / 7),
        peak_auc: peak.and_then(|p| p.auc),
        sweep,
    }
}

/// Weekly counters: areas covered, areas over the SD threshold, and areas whose case
/// count rose by the ratio threshold.
pub(crate) struct CoverageRow {
    pub week: NaiveDate,
    pub n_areas_with_data: usize,
    pub n_over_2sd: usize,
    pub n_case_rises: Option<usize>,
}

pub(crate) fn coverage(runs: &[DetectionRun], cases: Option<&EpiSeries>, ratio: f64) -> Vec<CoverageRow> {
    let rises = cases.map(|c| label_jumps(&c.window_counts(true), &JumpRule::ratio(ratio)));
    runs.iter()
        .map(|r| {
            let week = r.week_predicted.start();
            let n_case_rises = match &rises {
                Some(l) => Some(l.labels.iter().filter(|((_, d), v)| *d == week && **v).count()),
                None => r.counters.n_case_rises,
            };
            CoverageRow {
                week,
                n_areas_with_data: r.counters.n_areas_with_data,
                n_over_2sd: r.counters.n_over_2sd,
                n_case_rises,
            }
        })
        .collect()
}

fn counters_csv(rows: &[CoverageRow]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut write = |r: [String; 4]| w.write_record(r).map_err(|e| CliError::Input(anyhow!(e)));
    write(["week_start", "n_areas_with_data", "n_over_2sd", "n_case_rises"].map(String::from))?;
    for r in rows {
        write([
            r.week.to_string(),
            r.n_areas_with_data.to_string(),
            r.n_over_2sd.to_string(),
            r.n_case_rises.map_or_else(String::new, |n| n.to_string()),
        ])?;
    }
    w.into_inner().map_err(|e| CliError::Input(anyhow!("{e}")))
}

pub(crate) fn coverage_svg(rows: &[CoverageRow]) -> String {
    let x = |i: usize| i as f64;
    let mut series = vec![
        Series {
            name: "areas with data".into(),
            points: rows
                .iter()
                .enumerate()
                .map(|(i, r)| (x(i), Some(r.n_areas_with_data as f64)))
                .collect(),
        },
        Series {
            name: "over 2 SD".into(),
            points: rows
                .iter()
                .enumerate()
                .map(|(i, r)| (x(i), Some(r.n_over_2sd as f64)))
                .collect(),
        },
    ];
    if rows.iter().any(|r| r.n_case_rises.is_some()) {
        series.push(Series {
            name: "case rises".into(),
            points: rows
                .iter()
                .enumerate()
                .map(|(i, r)| (x(i), r.n_case_rises.map(|n| n as f64)))
                .collect(),
        });
    }
    let title = match (rows.first(), rows.last()) {
        (Some(a), Some(b)) => format!("Weekly counters, {} to {}", a.week, b.week),
        _ => "Weekly counters".to_string(),
    };
    line_chart(&title, "week", "areas", &series, None)
}
