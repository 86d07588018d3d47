use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use super::{csv_line, PanelError, WeekIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpiKind {
    DailyCases,
    WeeklyDeaths,
}

/// Case or death counts per area. Daily series are keyed by date, weekly series by
/// the Monday starting the week.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpiSeries {
    kind: EpiKind,
    values: BTreeMap<String, BTreeMap<NaiveDate, u64>>,
}

/// Seven-day counts per area keyed by window start. The predecessor of the window
/// starting on `d` is the one starting on `d - 7`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct WindowCounts {
    pub windows: BTreeMap<String, BTreeMap<NaiveDate, u64>>,
}

impl WindowCounts {
    pub fn get(&self, area_id: &str, start: NaiveDate) -> Option<u64> {
        self.windows.get(area_id)?.get(&start).copied()
    }

    /// Multiplies every count by `factor`.
    pub fn scaled(&self, factor: u64) -> Self {
        let windows = self
            .windows
            .iter()
            .map(|(a, m)| (a.clone(), m.iter().map(|(d, c)| (*d, c * factor)).collect()))
            .collect();
        Self { windows }
    }
}

impl EpiSeries {
    pub fn new(kind: EpiKind) -> Self {
        Self {
            kind,
            values: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> EpiKind {
        self.kind
    }

    pub fn insert(&mut self, date: NaiveDate, area_id: &str, count: u64) -> Result<(), PanelError> {
        if self.kind == EpiKind::WeeklyDeaths {
            WeekIndex::new(date)?;
        }
        let area = self.values.entry(area_id.to_string()).or_default();
        if area.insert(date, count).is_some() {
            return Err(PanelError::DuplicateDate {
                area_id: area_id.to_string(),
                date,
            });
        }
        Ok(())
    }

    pub fn areas(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn series(&self, area_id: &str) -> Option<&BTreeMap<NaiveDate, u64>> {
        self.values.get(area_id)
    }

    pub fn total(&self) -> u64 {
        self.values.values().flat_map(|m| m.values()).sum()
    }

    /// Dense daily vector for `[start, start + len)`, zero where no value is recorded.
    pub fn daily_vector(&self, area_id: &str, start: NaiveDate, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        if let Some(m) = self.values.get(area_id) {
            let end = start + Duration::days(len as i64);
            for (d, c) in m.range(start..end) {
                out[(*d - start).num_days() as usize] = *c as f64;
            }
        }
        out
    }

    /// Seven-day sums. Daily series yield one window per start day whose seven days
    /// fall inside the area's recorded date span (missing days count as zero), or only
    /// Monday-starting windows when `mondays_only`. Weekly series are returned as is.
    pub fn window_counts(&self, mondays_only: bool) -> WindowCounts {
        let mut windows = BTreeMap::new();
        for (area, m) in &self.values {
            let out: BTreeMap<NaiveDate, u64> = match self.kind {
                EpiKind::WeeklyDeaths => m.clone(),
                EpiKind::DailyCases => {
                    let (Some((first, _)), Some((last, _))) = (m.first_key_value(), m.last_key_value()) else {
                        continue;
                    };
                    let mut out = BTreeMap::new();
                    let mut d = *first;
                    while d + Duration::days(6) <= *last {
                        if !mondays_only || WeekIndex::new(d).is_ok() {
                            let sum = m.range(d..d + Duration::days(7)).map(|(_, c)| c).sum();
                            out.insert(d, sum);
                        }
                        d += Duration::days(1);
                    }
                    out
                }
            };
            windows.insert(area.clone(), out);
        }
        WindowCounts { windows }
    }

    pub fn load_cases_csv(path: impl AsRef<Path>) -> Result<Self, PanelError> {
        Self::read_csv(std::fs::File::open(path.as_ref())?, EpiKind::DailyCases)
    }

    pub fn load_mortality_csv(path: impl AsRef<Path>) -> Result<Self, PanelError> {
        Self::read_csv(std::fs::File::open(path.as_ref())?, EpiKind::WeeklyDeaths)
    }

    fn columns(kind: EpiKind) -> [&'static str; 3] {
        match kind {
            EpiKind::DailyCases => ["date", "area_id", "cases"],
            EpiKind::WeeklyDeaths => ["week_start", "area_id", "deaths"],
        }
    }

    /// Reads `date,area_id,cases` (daily) or `week_start,area_id,deaths` (weekly).
    pub fn read_csv<R: Read>(reader: R, kind: EpiKind) -> Result<Self, PanelError> {
        let cols = Self::columns(kind);
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        super::require_headers(&headers, &cols)?;
        let idx: Vec<usize> = cols
            .iter()
            .map(|c| headers.iter().position(|h| h == *c).expect("checked"))
            .collect();
        let mut out = Self::new(kind);
        for rec in rdr.records() {
            let rec = rec?;
            let line = csv_line(&rec);
            let malformed = |message: String| PanelError::Malformed { line, message };
            let field = |i: usize| rec.get(idx[i]).unwrap_or("").trim();
            let date = NaiveDate::parse_from_str(field(0), "%Y-%m-%d")
                .map_err(|e| malformed(format!("bad date {:?}: {e}", field(0))))?;
            let count: u64 = field(2)
                .parse()
                .map_err(|e| malformed(format!("bad count {:?}: {e}", field(2))))?;
            out.insert(date, field(1), count).map_err(|e| match e {
                PanelError::NotMonday(_) => malformed(e.to_string()),
                other => other,
            })?;
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), PanelError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::columns(self.kind))?;
        for (area, m) in &self.values {
            for (d, c) in m {
                w.write_record([d.format("%Y-%m-%d").to_string().as_str(), area.as_str(), &c.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn daily_windows_sum_seven_days() {
        let mut s = EpiSeries::new(EpiKind::DailyCases);
        for i in 0..14 {
            s.insert(d("2020-03-02") + Duration::days(i), "A", i as u64).unwrap();
        }
        let all = s.window_counts(false);
        assert_eq!(all.windows["A"].len(), 8);
        assert_eq!(all.get("A", d("2020-03-02")), Some(21));
        assert_eq!(all.get("A", d("2020-03-03")), Some(28));
        let mondays = s.window_counts(true);
        assert_eq!(mondays.windows["A"].len(), 2);
        assert_eq!(mondays.get("A", d("2020-03-09")), Some(70));
    }

    #[test]
    fn weekly_requires_monday_and_unique_dates() {
        let mut s = EpiSeries::new(EpiKind::WeeklyDeaths);
        assert!(s.insert(d("2020-03-03"), "A", 1).is_err());
        s.insert(d("2020-03-02"), "A", 1).unwrap();
        assert!(matches!(
            s.insert(d("2020-03-02"), "A", 2),
            Err(PanelError::DuplicateDate { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let text = "date,area_id,cases\n2020-03-02,A,3\n2020-03-03,A,5\n2020-03-02,B,0\n";
        let s = EpiSeries::read_csv(text.as_bytes(), EpiKind::DailyCases).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = EpiSeries::read_csv(buf.as_slice(), EpiKind::DailyCases).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.total(), 8);
        assert_eq!(s.daily_vector("A", d("2020-03-01"), 4), vec![0.0, 3.0, 5.0, 0.0]);
    }

    #[test]
    fn mortality_csv_rejects_non_monday() {
        let text = "week_start,area_id,deaths\n2020-03-04,A,3\n";
        assert!(matches!(
            EpiSeries::read_csv(text.as_bytes(), EpiKind::WeeklyDeaths),
            Err(PanelError::Malformed { line: 2, .. })
        ));
    }
}
