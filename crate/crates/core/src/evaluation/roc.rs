use std::collections::BTreeMap;
use std::io::Write;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{EvalError, JumpLabels};

/// Scores keyed by (area, week start).
pub type ScoreMap = BTreeMap<(String, NaiveDate), f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    /// Mann-Whitney AUC with ties counted as one half.
    pub auc: f64,
    /// (false-positive rate, true-positive rate) from (0, 0) to (1, 1).
    pub roc_points: Vec<(f64, f64)>,
    pub n_pos: usize,
    pub n_neg: usize,
    pub lag_days: i64,
}

impl RocResult {
    pub fn trapezoid_auc(&self) -> f64 {
        trapezoid_area(&self.roc_points)
    }
}

/// Probability that a random positive outscores a random negative, ties counting one
/// half, via midranks of the pooled sample.
pub fn mann_whitney_auc(pos: &[f64], neg: &[f64]) -> Option<f64> {
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|s| (*s, true))
        .chain(neg.iter().map(|s| (*s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // Ranks i+1 ..= j share the midrank.
        let midrank = (i + 1 + j) as f64 / 2.0;
        rank_sum_pos += midrank * all[i..j].iter().filter(|e| e.1).count() as f64;
        i = j;
    }
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    let u = rank_sum_pos - np * (np + 1.0) / 2.0;
    Some(u / (np * nn))
}

/// ROC points from a descending threshold sweep; tied scores move in a single step.
pub fn roc_curve(pos: &[f64], neg: &[f64]) -> Vec<(f64, f64)> {
    let mut all: Vec<(f64, bool)> = pos
        .iter()
        .map(|s| (*s, true))
        .chain(neg.iter().map(|s| (*s, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (np, nn) = (pos.len().max(1) as f64, neg.len().max(1) as f64);
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < all.len() {
        let score = all[i].0;
        while i < all.len() && all[i].0 == score {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / nn, tp as f64 / np));
    }
    points
}

pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Pools (area, week) pairs: the score at week start `d` is matched with the label of
/// the window starting at `d + lag_days`. Unlabeled windows are skipped.
pub fn roc_auc(scores: &ScoreMap, labels: &JumpLabels, lag_days: i64) -> Result<RocResult, EvalError> {
    let (pos, neg) = split_by_label(scores, labels, lag_days);
    if pos.is_empty() {
        return Err(EvalError::NoPositives { lag_days });
    }
    if neg.is_empty() {
        return Err(EvalError::NoNegatives { lag_days });
    }
    Ok(RocResult {
        auc: mann_whitney_auc(&pos, &neg).expect("both non-empty"),
        roc_points: roc_curve(&pos, &neg),
        n_pos: pos.len(),
        n_neg: neg.len(),
        lag_days,
    })
}

fn split_by_label(scores: &ScoreMap, labels: &JumpLabels, lag_days: i64) -> (Vec<f64>, Vec<f64>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for ((area, d), s) in scores {
        if !s.is_finite() {
            continue;
        }
        match labels.get(area, *d + Duration::days(lag_days)) {
            Some(true) => pos.push(*s),
            Some(false) => neg.push(*s),
            None => {}
        }
    }
    (pos, neg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagAuc {
    pub lag_days: i64,
    /// `None` where the lag has no positives or no negatives.
    pub auc: Option<f64>,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// AUC at each lag; lags failing the pairing preconditions are reported as undefined.
pub fn auc_vs_lag(scores: &ScoreMap, labels: &JumpLabels, lags: impl IntoIterator<Item = i64>) -> Vec<LagAuc> {
    lags.into_iter()
        .map(|lag_days| {
            let (pos, neg) = split_by_label(scores, labels, lag_days);
            LagAuc {
                lag_days,
                auc: mann_whitney_auc(&pos, &neg),
                n_pos: pos.len(),
                n_neg: neg.len(),
            }
        })
        .collect()
}

/// The defined lag with the highest AUC (earliest lag on ties).
pub fn peak_lag(sweep: &[LagAuc]) -> Option<&LagAuc> {
    sweep
        .iter()
        .filter(|r| r.auc.is_some())
        .fold(None, |best: Option<&LagAuc>, r| match best {
            Some(b) if b.auc >= r.auc => Some(b),
            _ => Some(r),
        })
}

/// Writes `lag,auc,n_pos,n_neg`. Lags are divided by `lag_unit_days` (7 for weekly
/// sweeps); undefined AUCs are written as `undefined`.
pub fn write_auc_csv<W: Write>(sweep: &[LagAuc], lag_unit_days: i64, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["lag", "auc", "n_pos", "n_neg"])?;
    for r in sweep {
        let lag = if r.lag_days % lag_unit_days == 0 {
            (r.lag_days / lag_unit_days).to_string()
        } else {
            format!("{}", r.lag_days as f64 / lag_unit_days as f64)
        };
        let auc = r.auc.map_or_else(|| "undefined".to_string(), |a| format!("{a:.6}"));
        w.write_record([lag, auc, r.n_pos.to_string(), r.n_neg.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
