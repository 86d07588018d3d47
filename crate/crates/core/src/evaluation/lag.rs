use std::collections::BTreeMap;
use std::io::Write;
use std::ops::RangeInclusive;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{moving_average, EvalError};
use crate::panel::{EpiSeries, FractionPanel};

/// Lead/lag search settings. Positive lags mean searches precede cases.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LagParams {
    pub min_lag_days: i64,
    pub max_lag_days: i64,
    pub smoothing_window: usize,
    pub min_overlap_days: usize,
}

impl Default for LagParams {
    fn default() -> Self {
        Self {
            min_lag_days: -35,
            max_lag_days: 35,
            smoothing_window: 7,
            min_overlap_days: 30,
        }
    }
}

impl LagParams {
    pub fn lags(&self) -> RangeInclusive<i64> {
        self.min_lag_days..=self.max_lag_days
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagCorrelation {
    pub best_lag_days: i64,
    pub best_correlation: f64,
    /// Pearson correlation per lag; lags with undefined correlation are absent.
    pub correlogram: BTreeMap<i64, f64>,
}

/// Pearson correlation over pairs where both values are finite. `None` with fewer than
/// two pairs or zero variance on either side.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (*a, *b))
        .collect();
    pearson_pairs(&pairs)
}

fn pearson_pairs(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in pairs {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // Spreads within rounding of the mean count as zero variance.
    let flat = |ss: f64, m: f64| (ss / n).sqrt() <= 64.0 * f64::EPSILON * m.abs();
    if sxx <= 0.0 || syy <= 0.0 || flat(sxx, mx) || flat(syy, my) {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Correlates `search[t]` with `cases[t + lag]` for each lag, over days where both are
/// finite. Lags with fewer than `min_overlap_days` pairs or zero variance are skipped.
/// The best lag is the one with the highest correlation, the smallest lag on ties.
/// Inputs are expected to be smoothed already.
pub fn best_lag_correlation(
    search: &[f64],
    cases: &[f64],
    lags: RangeInclusive<i64>,
    min_overlap_days: usize,
) -> Result<LagCorrelation, EvalError> {
    let mut correlogram = BTreeMap::new();
    let mut best: Option<(i64, f64)> = None;
    for lag in lags {
        let pairs: Vec<(f64, f64)> = (0..search.len() as i64)
            .filter_map(|t| {
                let u = t + lag;
                if u < 0 || u >= cases.len() as i64 {
                    return None;
                }
                let (s, c) = (search[t as usize], cases[u as usize]);
                (s.is_finite() && c.is_finite()).then_some((s, c))
            })
            .collect();
        if pairs.len() < min_overlap_days {
            continue;
        }
        let Some(r) = pearson_pairs(&pairs) else {
            continue;
        };
        correlogram.insert(lag, r);
        if best.is_none_or(|(_, b)| r > b) {
            best = Some((lag, r));
        }
    }
    let (best_lag_days, best_correlation) = best.ok_or(EvalError::NoValidLag)?;
    Ok(LagCorrelation {
        best_lag_days,
        best_correlation,
        correlogram,
    })
}

/// Daily keyword fractions per area on a shared calendar. NaN marks days without data.
#[derive(Clone, Debug, PartialEq)]
pub struct DailySearch {
    pub start: NaiveDate,
    pub n_days: usize,
    /// area → keyword → daily values.
    pub series: BTreeMap<String, Vec<Vec<f64>>>,
}

impl DailySearch {
    /// Expands weekly fractions to a daily step series: every day of a week carries the
    /// week's fraction. Weeks in which an area is absent are NaN.
    pub fn from_weekly(panel: &FractionPanel) -> Option<Self> {
        let weeks = panel.weeks();
        let (first, last) = (*weeks.first()?, *weeks.last()?);
        let n_days = ((last.start() - first.start()).num_days() + 7) as usize;
        let n_k = panel.n_keywords();
        let mut series: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
        for w in &weeks {
            let offset = (w.start() - first.start()).num_days() as usize;
            for area in panel.areas_in(*w) {
                let f = panel.get(*w, area).expect("listed");
                let s = series
                    .entry(area.to_string())
                    .or_insert_with(|| vec![vec![f64::NAN; n_days]; n_k]);
                for (k, v) in f.iter().enumerate() {
                    s[k][offset..offset + 7].fill(*v);
                }
            }
        }
        Some(Self {
            start: first.start(),
            n_days,
            series,
        })
    }

    pub fn get(&self, area_id: &str, keyword: usize) -> Option<&[f64]> {
        self.series.get(area_id).map(|s| s[keyword].as_slice())
    }

    pub fn end(&self) -> NaiveDate {
        self.start + Duration::days(self.n_days as i64)
    }
}

/// Best lag for one (keyword, area).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaLag {
    pub keyword: String,
    pub area_id: String,
    pub lag: LagCorrelation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagTableRow {
    pub keyword: String,
    pub median_correlation: f64,
    pub median_lag_days: i64,
    pub n_areas: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LagTable {
    pub rows: Vec<LagTableRow>,
    /// Keywords without a single area with a valid correlation.
    pub omitted: Vec<String>,
    pub per_area: Vec<AreaLag>,
}

/// Median of an unsorted sample; even counts average the two middle values.
pub fn median_f64(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Median of integer lags; even counts take the lower middle element.
pub fn median_lag(values: &[i64]) -> Option<i64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    Some(v[(v.len() - 1) / 2])
}

/// Per keyword, smooths each area's search and case series, finds the best lag, and
/// takes medians across areas. `keywords` pairs registry indices with display names.
pub fn median_lag_table(
    search: &DailySearch,
    cases: &EpiSeries,
    keywords: &[(usize, String)],
    params: &LagParams,
) -> Result<LagTable, EvalError> {
    let mut smoothed_cases = BTreeMap::new();
    for area in search.series.keys() {
        if cases.series(area).is_none() {
            continue;
        }
        let c = cases.daily_vector(area, search.start, search.n_days);
        smoothed_cases.insert(area.clone(), moving_average(&c, params.smoothing_window)?);
    }
    let mut table = LagTable::default();
    for (k, name) in keywords {
        let mut found = Vec::new();
        for (area, c) in &smoothed_cases {
            let s = search.get(area, *k).ok_or(EvalError::UnknownKeyword(*k))?;
            let s = moving_average(s, params.smoothing_window)?;
            if let Ok(lag) = best_lag_correlation(&s, c, params.lags(), params.min_overlap_days) {
                found.push(AreaLag {
                    keyword: name.clone(),
                    area_id: area.clone(),
                    lag,
                });
            }
        }
        if found.is_empty() {
            table.omitted.push(name.clone());
            continue;
        }
        let corrs: Vec<f64> = found.iter().map(|a| a.lag.best_correlation).collect();
        let lags: Vec<i64> = found.iter().map(|a| a.lag.best_lag_days).collect();
        table.rows.push(LagTableRow {
            keyword: name.clone(),
            median_correlation: median_f64(&corrs).expect("non-empty"),
            median_lag_days: median_lag(&lags).expect("non-empty"),
            n_areas: found.len(),
        });
        table.per_area.extend(found);
    }
    Ok(table)
}

impl LagTable {
    /// Writes `keyword,median_correlation,median_lag_days`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["keyword", "median_correlation", "median_lag_days"])?;
        for r in &self.rows {
            w.write_record([
                r.keyword.as_str(),
                &format!("{:.6}", r.median_correlation),
                &r.median_lag_days.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{EpiKind, WeekIndex};

    fn bump(n: usize, center: f64, width: f64) -> Vec<f64> {
        (0..n).map(|t| (-((t as f64 - center) / width).powi(2)).exp()).collect()
    }

    #[test]
    fn self_correlation_is_lag_zero() {
        let s = bump(100, 50.0, 10.0);
        let r = best_lag_correlation(&s, &s, -35..=35, 30).unwrap();
        assert_eq!(r.best_lag_days, 0);
        assert!((r.best_correlation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shift_moves_best_lag_exactly() {
        // cases[t] = search[t - 12]: searches lead by 12 days.
        let search = bump(120, 40.0, 8.0);
        let cases = bump(120, 52.0, 8.0);
        let r = best_lag_correlation(&search, &cases, -35..=35, 30).unwrap();
        assert_eq!(r.best_lag_days, 12);
        let r = best_lag_correlation(&cases, &search, -35..=35, 30).unwrap();
        assert_eq!(r.best_lag_days, -12);
    }

    #[test]
    fn undefined_lags_are_skipped() {
        let flat = vec![1.0; 40];
        assert!(matches!(
            best_lag_correlation(&flat, &bump(40, 20.0, 5.0), -5..=5, 30),
            Err(EvalError::NoValidLag)
        ));
        let r = best_lag_correlation(&bump(40, 20.0, 5.0), &bump(40, 20.0, 5.0), -15..=15, 30).unwrap();
        assert_eq!(r.correlogram.len(), 21);
        assert_eq!(*r.correlogram.keys().next().unwrap(), -10);
    }

    #[test]
    fn medians() {
        assert_eq!(median_lag(&[21, 15, 17]), Some(17));
        assert_eq!(median_lag(&[10, 20]), Some(10));
        assert_eq!(median_f64(&[0.2, 0.4]), Some(0.30000000000000004));
        assert_eq!(median_f64(&[0.7]), Some(0.7));
        assert_eq!(median_lag(&[]), None);
    }

    #[test]
    fn pearson_basics() {
        let close = |r: Option<f64>, v: f64| (r.unwrap() - v).abs() < 1e-12;
        assert!(close(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]), 1.0));
        assert!(close(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0));
        assert_eq!(pearson(&[1.0, 1.0], &[1.0, 2.0]), None);
        assert_eq!(pearson(&[0.1; 5], &[1.0, 2.0, 3.0, 4.0, 6.0]), None);
        assert!(close(pearson(&[1.0, f64::NAN, 3.0, 4.0], &[1.0, 9.0, 3.0, 4.0]), 1.0));
    }

    #[test]
    fn weekly_expansion_and_single_area_table() {
        let w0 = WeekIndex::new(NaiveDate::from_ymd_opt(2020, 3, 2).unwrap()).unwrap();
        let mut panel = FractionPanel::new(2);
        let mut cases = EpiSeries::new(EpiKind::DailyCases);
        let weekly = [1.0, 2.0, 4.0, 8.0, 6.0, 3.0, 2.0, 1.0, 1.0, 0.5];
        for (i, v) in weekly.iter().enumerate() {
            let w = w0.plus_weeks(i as i64);
            panel.insert(w, "A", vec![v * 1e-3, 0.001]).unwrap();
            for (j, d) in w.days().enumerate() {
                cases.insert(d, "A", (v * 10.0) as u64 + j as u64 % 2).unwrap();
            }
        }
        let daily = DailySearch::from_weekly(&panel).unwrap();
        assert_eq!(daily.n_days, 70);
        assert_eq!(daily.get("A", 0).unwrap()[13], 2e-3);
        let params = LagParams {
            min_lag_days: -7,
            max_lag_days: 7,
            ..LagParams::default()
        };
        let table = median_lag_table(
            &daily,
            &cases,
            &[(0, "k0".to_string()), (1, "flat".to_string())],
            &params,
        )
        .unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.omitted, vec!["flat".to_string()]);
        let row = &table.rows[0];
        assert_eq!(row.n_areas, 1);
        assert_eq!(row.median_lag_days, table.per_area[0].lag.best_lag_days);
        assert_eq!(row.median_correlation, table.per_area[0].lag.best_correlation);
        assert!(row.median_lag_days.abs() <= 1);
        assert!(row.median_correlation > 0.95);
    }
}
