use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{KeywordPair, OutlierError};
use crate::matching::{ControlModel, MatchingError};
use crate::panel::{FractionPanel, WeekIndex};

/// Why a modeled area has no outlier measure in the prediction week.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Exclusion {
    /// The area itself has no data in the prediction week.
    TargetMissing { area_id: String },
    /// One of the area's controls has no data in the prediction week.
    ControlMissing { area_id: String, control: String },
}

impl Exclusion {
    pub fn area_id(&self) -> &str {
        match self {
            Exclusion::TargetMissing { area_id } | Exclusion::ControlMissing { area_id, .. } => area_id,
        }
    }
}

/// Composite value for one area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Composite {
    pub value: f64,
    /// Both factors were negative, so a large positive product reflects two
    /// below-prediction rates.
    pub both_negative: bool,
}

/// Outlier measures for one prediction week.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutlierFrame {
    /// The prediction week (one after the models' fitting week).
    pub week: WeekIndex,
    pub n_keywords: usize,
    /// Actual minus predicted fraction per keyword.
    pub raw: BTreeMap<String, Vec<f64>>,
    /// Per-keyword z-scores across included areas; empty until [`standardize`] runs.
    pub standardized: BTreeMap<String, Vec<f64>>,
    /// Keyword indices whose raw values had no spread; their z-scores are zero.
    pub zero_variance: Vec<usize>,
    pub composite: BTreeMap<String, Composite>,
    pub composite_pair: Option<KeywordPair>,
    /// Included areas lacking a standardized vector when the composite was formed.
    pub composite_omitted: Vec<String>,
    pub included_areas: Vec<String>,
    pub excluded: Vec<Exclusion>,
}

/// Raw outlier measures: each model is applied at `week_next` and its prediction is
/// subtracted from the target's actual fractions. Areas whose model cannot be applied
/// are excluded and listed.
pub fn outlier_measure(
    panel: &FractionPanel,
    models: &[ControlModel],
    week_next: WeekIndex,
) -> Result<OutlierFrame, OutlierError> {
    let mut raw = BTreeMap::new();
    let mut excluded = Vec::new();
    for m in models {
        if m.week_fitted.next() != week_next {
            return Err(OutlierError::WeekMismatch {
                area_id: m.target.clone(),
                fitted: m.week_fitted,
                week_next,
            });
        }
        let Some(actual) = panel.get(week_next, &m.target) else {
            excluded.push(Exclusion::TargetMissing {
                area_id: m.target.clone(),
            });
            continue;
        };
        match m.predict(panel, week_next) {
            Ok(pred) => {
                let d = actual.iter().zip(&pred).map(|(a, p)| a - p).collect();
                raw.insert(m.target.clone(), d);
            }
            Err(MatchingError::ControlAbsent { control, .. }) => {
                excluded.push(Exclusion::ControlMissing {
                    area_id: m.target.clone(),
                    control,
                });
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(OutlierFrame {
        week: week_next,
        n_keywords: panel.n_keywords(),
        included_areas: raw.keys().cloned().collect(),
        raw,
        standardized: BTreeMap::new(),
        zero_variance: Vec::new(),
        composite: BTreeMap::new(),
        composite_pair: None,
        composite_omitted: Vec::new(),
        excluded,
    })
}

/// Population mean and standard deviation, or `None` for an empty slice.
pub(crate) fn mean_sd(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Per keyword, z-scores each area's raw value against the mean and population SD
/// across included areas. Keywords without spread standardize to zero and are flagged.
pub fn standardize(mut frame: OutlierFrame) -> OutlierFrame {
    let areas: Vec<&String> = frame.raw.keys().collect();
    let mut z: BTreeMap<String, Vec<f64>> = areas
        .iter()
        .map(|a| ((*a).clone(), vec![0.0; frame.n_keywords]))
        .collect();
    let mut zero_variance = Vec::new();
    for k in 0..frame.n_keywords {
        let column: Vec<f64> = frame.raw.values().map(|v| v[k]).collect();
        let spread = column.iter().any(|v| *v != column[0]);
        match mean_sd(&column) {
            Some((mean, sd)) if spread && sd > 0.0 => {
                for (a, v) in areas.iter().zip(&column) {
                    z.get_mut(*a).expect("area")[k] = (v - mean) / sd;
                }
            }
            _ => zero_variance.push(k),
        }
    }
    frame.standardized = z;
    frame.zero_variance = zero_variance;
    frame
}

/// Product of the standardized measures of the two keywords in `pair`.
pub fn composite_signal(mut frame: OutlierFrame, pair: KeywordPair) -> Result<OutlierFrame, OutlierError> {
    pair.check(frame.n_keywords)?;
    let mut composite = BTreeMap::new();
    let mut omitted = Vec::new();
    for area in &frame.included_areas {
        match frame.standardized.get(area) {
            Some(z) => {
                let (a, b) = (z[pair.first], z[pair.second]);
                composite.insert(
                    area.clone(),
                    Composite {
                        value: a * b,
                        both_negative: a < 0.0 && b < 0.0,
                    },
                );
            }
            None => omitted.push(area.clone()),
        }
    }
    frame.composite = composite;
    frame.composite_pair = Some(pair);
    frame.composite_omitted = omitted;
    Ok(frame)
}
