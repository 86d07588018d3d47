use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{KeywordPair, OutlierError, OutlierFrame};
use crate::panel::WeekIndex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub area_id: String,
    pub composite: f64,
    pub threshold: f64,
    pub both_negative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlertReport {
    pub week: WeekIndex,
    pub threshold: f64,
    pub percentile: f64,
    pub alerts: Vec<Alert>,
    pub n_areas_covered: usize,
}

/// Percentile with linear interpolation between order statistics (rank
/// `p / 100 · (n − 1)` on the sorted values). Returns `None` for an empty input or a
/// percentile outside [0, 100].
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=100.0).contains(&p) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Thresholds the composite against the given percentile of the week's standardized
/// values for every keyword other than the composite pair, pooled across included
/// areas. Alerts are areas whose composite strictly exceeds the threshold.
pub fn alert_threshold(frame: &OutlierFrame, percentile_level: f64) -> Result<AlertReport, OutlierError> {
    let pair: KeywordPair = frame.composite_pair.ok_or(OutlierError::CompositeMissing)?;
    if !(0.0..=100.0).contains(&percentile_level) {
        return Err(OutlierError::InvalidPercentile(percentile_level));
    }
    let pool: Vec<f64> = frame
        .included_areas
        .iter()
        .filter_map(|a| frame.standardized.get(a))
        .flat_map(|z| {
            z.iter()
                .enumerate()
                .filter(|(k, _)| *k != pair.first && *k != pair.second)
                .map(|(_, v)| *v)
        })
        .collect();
    let threshold = percentile(&pool, percentile_level).ok_or(OutlierError::EmptyReferencePool)?;
    let alerts = frame
        .composite
        .iter()
        .filter(|(_, c)| c.value > threshold)
        .map(|(a, c)| Alert {
            area_id: a.clone(),
            composite: c.value,
            threshold,
            both_negative: c.both_negative,
        })
        .collect();
    Ok(AlertReport {
        week: frame.week,
        threshold,
        percentile: percentile_level,
        alerts,
        n_areas_covered: frame.included_areas.len(),
    })
}

/// Writes `week_start,area_id,composite,threshold,both_negative_flag` rows.
pub fn write_alerts_csv<W: Write>(report: &AlertReport, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["week_start", "area_id", "composite", "threshold", "both_negative_flag"])?;
    let week = report.week.to_string();
    for a in &report.alerts {
        w.write_record([
            week.as_str(),
            a.area_id.as_str(),
            &a.composite.to_string(),
            &a.threshold.to_string(),
            if a.both_negative { "true" } else { "false" },
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::outlier::composite_signal;
    use chrono::NaiveDate;
    use std::collections::BTreeMap;

    #[test]
    fn percentile_of_one_to_hundred() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((percentile(&v, 95.0).unwrap() - 95.05).abs() < 1e-12);
        assert_eq!(percentile(&v, 0.0), Some(1.0));
        assert_eq!(percentile(&v, 100.0), Some(100.0));
        assert_eq!(percentile(&[3.0], 50.0), Some(3.0));
        assert_eq!(percentile(&[], 50.0), None);
        assert_eq!(percentile(&v, 101.0), None);
    }

    fn frame(z: &[(&str, Vec<f64>)]) -> OutlierFrame {
        let standardized: BTreeMap<String, Vec<f64>> = z.iter().map(|(a, v)| (a.to_string(), v.clone())).collect();
        let f = OutlierFrame {
            week: WeekIndex::new(NaiveDate::from_ymd_opt(2020, 3, 9).unwrap()).unwrap(),
            n_keywords: z[0].1.len(),
            raw: standardized.clone(),
            included_areas: standardized.keys().cloned().collect(),
            standardized,
            zero_variance: vec![],
            composite: BTreeMap::new(),
            composite_pair: None,
            composite_omitted: vec![],
            excluded: vec![],
        };
        composite_signal(f, KeywordPair { first: 0, second: 1 }).unwrap()
    }

    #[test]
    fn pool_excludes_pair_and_alerts_strictly_above() {
        // Reference pool: keyword 2 across areas = {0, 1, 2, 3}; 50th pct = 1.5.
        let f = frame(&[
            ("A", vec![2.0, 2.0, 0.0]),
            ("B", vec![1.0, 1.5, 1.0]),
            ("C", vec![-2.0, -1.0, 2.0]),
            ("D", vec![9.0, 0.0, 3.0]),
        ]);
        let r = alert_threshold(&f, 50.0).unwrap();
        assert!((r.threshold - 1.5).abs() < 1e-12);
        let ids: Vec<&str> = r.alerts.iter().map(|a| a.area_id.as_str()).collect();
        assert_eq!(ids, vec!["A", "C"]);
        assert!(r.alerts[1].both_negative);
        assert!(r.alerts.iter().all(|a| a.composite > r.threshold));
        assert_eq!(r.n_areas_covered, 4);
    }

    #[test]
    fn no_alert_when_all_below() {
        let f = frame(&[("A", vec![0.1, 0.1, 5.0]), ("B", vec![0.2, 0.1, 6.0])]);
        assert!(alert_threshold(&f, 95.0).unwrap().alerts.is_empty());
    }

    #[test]
    fn empty_pool_is_an_error() {
        let f = frame(&[("A", vec![1.0, 1.0]), ("B", vec![2.0, 2.0])]);
        assert!(matches!(
            alert_threshold(&f, 95.0),
            Err(OutlierError::EmptyReferencePool)
        ));
    }

    #[test]
    fn alerts_csv_layout() {
        let r = AlertReport {
            week: WeekIndex::new(NaiveDate::from_ymd_opt(2020, 3, 9).unwrap()).unwrap(),
            threshold: 1.5,
            percentile: 95.0,
            alerts: vec![Alert {
                area_id: "E1".into(),
                composite: 3.0,
                threshold: 1.5,
                both_negative: true,
            }],
            n_areas_covered: 10,
        };
        let mut buf = Vec::new();
        write_alerts_csv(&r, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "week_start,area_id,composite,threshold,both_negative_flag\n2020-03-09,E1,3,1.5,true\n"
        );
    }
}
