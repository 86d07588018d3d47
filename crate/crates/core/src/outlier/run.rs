use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    alert_threshold, composite_signal, outlier_measure, standardize, AlertReport, KeywordPair, OutlierError,
    OutlierFrame,
};
use crate::evaluation::ScoreMap;
use crate::matching::{greedy_select, ControlModel, MatchingError, MatchingParams};
use crate::panel::{AreaSet, FractionPanel, WeekIndex, WindowCounts};

/// Which of the composite keywords must exceed the SD threshold for an area to count
/// in [`Counters::n_over_2sd`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExceedanceRule {
    #[default]
    Either,
    Both,
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub matching: MatchingParams,
    pub alert_percentile: f64,
    pub pair: KeywordPair,
    pub exceedance_sd: f64,
    pub exceedance_rule: ExceedanceRule,
    pub rise_ratio: f64,
}

impl DetectConfig {
    pub fn new(pair: KeywordPair) -> Self {
        Self {
            matching: MatchingParams::default(),
            alert_percentile: 95.0,
            pair,
            exceedance_sd: 2.0,
            exceedance_rule: ExceedanceRule::Either,
            rise_ratio: 2.5,
        }
    }
}

/// Week-level coverage and exceedance counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Areas with an outlier measure in the prediction week.
    pub n_areas_with_data: usize,
    /// Areas modeled in the fitting week but not measurable in the prediction week.
    pub n_coverage_lost: usize,
    /// Areas with data in the fitting week but no eligible controls.
    pub n_unmodeled: usize,
    pub n_over_2sd: usize,
    /// Areas whose Monday-week case count rose by at least the rise ratio; `None`
    /// without case data.
    pub n_case_rises: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Unmodeled {
    pub area_id: String,
    pub reason: String,
}

/// Full output for one (fit week, prediction week) pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRun {
    pub week_fitted: WeekIndex,
    pub week_predicted: WeekIndex,
    pub models: Vec<ControlModel>,
    pub unmodeled: Vec<Unmodeled>,
    pub frame: OutlierFrame,
    pub alerts: AlertReport,
    pub counters: Counters,
}

/// Fits controls for every area present in `week_fitted`, measures outliers at the
/// following week, and thresholds the composite.
pub fn weekly_run(
    panel: &FractionPanel,
    areas: &AreaSet,
    cases: Option<&WindowCounts>,
    week_fitted: WeekIndex,
    config: &DetectConfig,
) -> Result<DetectionRun, OutlierError> {
    let week_next = week_fitted.next();
    for w in [week_fitted, week_next] {
        if !panel.contains_week(w) {
            return Err(OutlierError::MissingWeek(w));
        }
    }
    let targets: Vec<&str> = panel.areas_in(week_fitted).collect();
    let fitted: Vec<Result<ControlModel, MatchingError>> = targets
        .par_iter()
        .map(|t| greedy_select(panel, areas, week_fitted, t, &config.matching))
        .collect();

    let mut models = Vec::new();
    let mut unmodeled = Vec::new();
    let mut first_unmodeled_err = None;
    for res in fitted {
        match res {
            Ok(m) => models.push(m),
            Err(e @ MatchingError::NoEligibleCandidates { .. }) => {
                let MatchingError::NoEligibleCandidates { target, .. } = &e else {
                    unreachable!()
                };
                unmodeled.push(Unmodeled {
                    area_id: target.clone(),
                    reason: e.to_string(),
                });
                first_unmodeled_err.get_or_insert(e);
            }
            Err(e) => return Err(e.into()),
        }
    }
    if models.is_empty() {
        if let Some(e) = first_unmodeled_err {
            return Err(e.into());
        }
    }

    let frame = outlier_measure(panel, &models, week_next)?;
    let frame = composite_signal(standardize(frame), config.pair)?;
    let alerts = alert_threshold(&frame, config.alert_percentile)?;
    let counters = Counters {
        n_areas_with_data: frame.included_areas.len(),
        n_coverage_lost: frame.excluded.len(),
        n_unmodeled: unmodeled.len(),
        n_over_2sd: count_exceedances(&frame, config),
        n_case_rises: cases.map(|c| count_case_rises(c, week_fitted, config.rise_ratio)),
    };
    Ok(DetectionRun {
        week_fitted,
        week_predicted: week_next,
        models,
        unmodeled,
        frame,
        alerts,
        counters,
    })
}

/// Runs every consecutive pair of panel weeks. Pairs whose weeks are not adjacent are
/// skipped; per-pair failures are returned alongside the fitted week.
pub fn run_all_weeks(
    panel: &FractionPanel,
    areas: &AreaSet,
    cases: Option<&WindowCounts>,
    config: &DetectConfig,
) -> Vec<(WeekIndex, Result<DetectionRun, OutlierError>)> {
    panel
        .weeks()
        .windows(2)
        .filter(|w| w[0].next() == w[1])
        .map(|w| (w[0], weekly_run(panel, areas, cases, w[0], config)))
        .collect()
}

/// Composite values keyed by (area, prediction week start), for ROC scoring.
pub fn composite_scores<'a>(runs: impl IntoIterator<Item = &'a DetectionRun>) -> ScoreMap {
    let mut out = ScoreMap::new();
    for run in runs {
        for (area, c) in &run.frame.composite {
            out.insert((area.clone(), run.week_predicted.start()), c.value);
        }
    }
    out
}

fn count_exceedances(frame: &OutlierFrame, config: &DetectConfig) -> usize {
    let t = config.exceedance_sd;
    frame
        .standardized
        .values()
        .filter(|z| {
            let a = z[config.pair.first] > t;
            let b = z[config.pair.second] > t;
            match config.exceedance_rule {
                ExceedanceRule::Either => a || b,
                ExceedanceRule::Both => a && b,
                ExceedanceRule::First => a,
                ExceedanceRule::Second => b,
            }
        })
        .count()
}

fn count_case_rises(cases: &WindowCounts, week_fitted: WeekIndex, ratio: f64) -> usize {
    let (w0, w1) = (week_fitted.start(), week_fitted.next().start());
    cases
        .windows
        .values()
        .filter(|m| match (m.get(&w0), m.get(&w1)) {
            (Some(&prev), Some(&cur)) => prev > 0 && cur as f64 >= ratio * prev as f64,
            _ => false,
        })
        .count()
}
