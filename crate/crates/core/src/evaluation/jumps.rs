use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::panel::WindowCounts;

/// Population used for the standard deviation in the SD rule.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdBaseline {
    /// The area's own earlier week-over-week differences (expanding window).
    #[default]
    AreaHistory,
    /// The same week's differences across all areas.
    CrossArea,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum JumpRule {
    /// Rise exceeds `multiplier` standard deviations of week-over-week differences.
    Sd { multiplier: f64, baseline: SdBaseline },
    /// Count at least `ratio` times the previous week's, which must be positive.
    Ratio { ratio: f64 },
}

impl JumpRule {
    pub fn sd(multiplier: f64) -> Self {
        JumpRule::Sd {
            multiplier,
            baseline: SdBaseline::AreaHistory,
        }
    }

    pub fn ratio(ratio: f64) -> Self {
        JumpRule::Ratio { ratio }
    }
}

/// Binary jump labels keyed by (area, window start). Windows with too little history
/// carry no label at all.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpLabels {
    pub rule: JumpRule,
    pub labels: BTreeMap<(String, NaiveDate), bool>,
}

impl JumpLabels {
    pub fn get(&self, area_id: &str, start: NaiveDate) -> Option<bool> {
        self.labels.get(&(area_id.to_string(), start)).copied()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.values().filter(|v| **v).count()
    }
}

fn pop_sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// Week-over-week difference at `d`, if the predecessor window exists.
fn diff(m: &BTreeMap<NaiveDate, u64>, d: NaiveDate) -> Option<f64> {
    let cur = *m.get(&d)?;
    let prev = *m.get(&(d - Duration::days(7)))?;
    Some(cur as f64 - prev as f64)
}

/// Labels week-over-week jumps.
///
/// * Ratio rule: labeled wherever the predecessor window exists.
/// * SD rule with area history: labeled where at least two earlier consecutive
///   differences exist (three prior weeks); the SD is the population SD of all of the
///   area's consecutive earlier differences.
/// * SD rule across areas: labeled where at least two areas have a difference that week.
pub fn label_jumps(counts: &WindowCounts, rule: &JumpRule) -> JumpLabels {
    let mut labels = BTreeMap::new();
    let week = Duration::days(7);
    match *rule {
        JumpRule::Ratio { ratio } => {
            for (area, m) in &counts.windows {
                for (&d, &cur) in m {
                    if let Some(&prev) = m.get(&(d - week)) {
                        let hit = prev > 0 && cur as f64 >= ratio * prev as f64;
                        labels.insert((area.clone(), d), hit);
                    }
                }
            }
        }
        JumpRule::Sd {
            multiplier,
            baseline: SdBaseline::AreaHistory,
        } => {
            for (area, m) in &counts.windows {
                for &d in m.keys() {
                    let Some(cur) = diff(m, d) else { continue };
                    let history: Vec<f64> = (1..).map_while(|k| diff(m, d - week * k)).collect();
                    if history.len() < 2 {
                        continue;
                    }
                    labels.insert((area.clone(), d), cur > multiplier * pop_sd(&history));
                }
            }
        }
        JumpRule::Sd {
            multiplier,
            baseline: SdBaseline::CrossArea,
        } => {
            let mut by_date: BTreeMap<NaiveDate, Vec<(&String, f64)>> = BTreeMap::new();
            for (area, m) in &counts.windows {
                for &d in m.keys() {
                    if let Some(x) = diff(m, d) {
                        by_date.entry(d).or_default().push((area, x));
                    }
                }
            }
            for (d, diffs) in by_date {
                if diffs.len() < 2 {
                    continue;
                }
                let values: Vec<f64> = diffs.iter().map(|(_, x)| *x).collect();
                let sd = pop_sd(&values);
                for (area, x) in diffs {
                    labels.insert((area.clone(), d), x > multiplier * sd);
                }
            }
        }
    }
    JumpLabels { rule: *rule, labels }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(counts: &[u64]) -> WindowCounts {
        let d0 = NaiveDate::from_ymd_opt(2020, 3, 2).unwrap();
        let m = counts
            .iter()
            .enumerate()
            .map(|(i, c)| (d0 + Duration::days(7 * i as i64), *c))
            .collect();
        WindowCounts {
            windows: BTreeMap::from([("A".to_string(), m)]),
        }
    }

    fn at(i: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 3, 2).unwrap() + Duration::days(7 * i)
    }

    #[test]
    fn ratio_boundaries() {
        let l = label_jumps(&series(&[10, 25]), &JumpRule::ratio(2.5));
        assert_eq!(l.get("A", at(1)), Some(true));
        assert_eq!(l.get("A", at(0)), None);
        let l = label_jumps(&series(&[10, 24]), &JumpRule::ratio(2.5));
        assert_eq!(l.get("A", at(1)), Some(false));
        let l = label_jumps(&series(&[0, 24]), &JumpRule::ratio(2.5));
        assert_eq!(l.get("A", at(1)), Some(false));
    }

    #[test]
    fn sd_rule_constant_is_all_false() {
        let l = label_jumps(&series(&[5; 8]), &JumpRule::sd(2.0));
        assert_eq!(l.labels.len(), 5);
        assert_eq!(l.n_positive(), 0);
        assert_eq!(l.get("A", at(2)), None);
        assert_eq!(l.get("A", at(3)), Some(false));
    }

    #[test]
    fn sd_rule_detects_spike() {
        // diffs: 1, -1, 1, 20 → history SD 0.943 at the spike.
        let l = label_jumps(&series(&[10, 11, 10, 11, 31]), &JumpRule::sd(2.0));
        assert_eq!(l.get("A", at(3)), Some(false));
        assert_eq!(l.get("A", at(4)), Some(true));
        let l = label_jumps(&series(&[10, 14, 10, 14, 15]), &JumpRule::sd(2.0));
        assert_eq!(l.get("A", at(4)), Some(false));
    }

    #[test]
    fn cross_area_rule() {
        let d0 = at(0);
        let mut windows = BTreeMap::new();
        for (i, jump) in [0u64, 1, 0, 1, 40].iter().enumerate() {
            windows.insert(format!("A{i}"), BTreeMap::from([(d0, 10), (at(1), 10 + jump)]));
        }
        let rule = JumpRule::Sd {
            multiplier: 1.5,
            baseline: SdBaseline::CrossArea,
        };
        let l = label_jumps(&WindowCounts { windows }, &rule);
        assert_eq!(l.labels.len(), 5);
        assert_eq!(l.get("A4", at(1)), Some(true));
        assert_eq!(l.n_positive(), 1);
    }

    proptest! {
        #[test]
        fn ratio_rule_scale_invariant(
            counts in proptest::collection::vec(0u64..500, 2..20),
            k in 1u64..50,
        ) {
            let base = series(&counts);
            let a = label_jumps(&base, &JumpRule::ratio(2.5));
            let b = label_jumps(&base.scaled(k), &JumpRule::ratio(2.5));
            prop_assert_eq!(a.labels, b.labels);
        }
    }
}
