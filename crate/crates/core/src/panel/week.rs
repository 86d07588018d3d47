use std::fmt;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

/// An analysis week, identified by the Monday it starts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "NaiveDate", into = "NaiveDate")]
pub struct WeekIndex(NaiveDate);

/// Returned when a week start is not a Monday.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("week start {0} is a {day}, not a Monday", day = .0.weekday())]
pub struct NotMonday(pub NaiveDate);

impl WeekIndex {
    pub fn new(start: NaiveDate) -> Result<Self, NotMonday> {
        if start.weekday() == Weekday::Mon {
            Ok(Self(start))
        } else {
            Err(NotMonday(start))
        }
    }

    /// The week containing `date`.
    pub fn containing(date: NaiveDate) -> Self {
        let back = date.weekday().num_days_from_monday() as i64;
        Self(date - Duration::days(back))
    }

    pub fn start(&self) -> NaiveDate {
        self.0
    }

    pub fn next(&self) -> Self {
        Self(self.0 + Duration::days(7))
    }

    pub fn prev(&self) -> Self {
        Self(self.0 - Duration::days(7))
    }

    pub fn plus_weeks(&self, n: i64) -> Self {
        Self(self.0 + Duration::days(7 * n))
    }

    /// Iterates the seven dates of the week.
    pub fn days(&self) -> impl Iterator<Item = NaiveDate> {
        let start = self.0;
        (0..7).map(move |d| start + Duration::days(d))
    }
}

impl TryFrom<NaiveDate> for WeekIndex {
    type Error = NotMonday;

    fn try_from(value: NaiveDate) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<WeekIndex> for NaiveDate {
    fn from(w: WeekIndex) -> Self {
        w.0
    }
}

impl fmt::Display for WeekIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%d"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn monday_only() {
        assert!(WeekIndex::new(d("2020-03-02")).is_ok());
        let err = WeekIndex::new(d("2020-03-04")).unwrap_err();
        assert!(err.to_string().contains("Wed"));
    }

    #[test]
    fn containing_and_stepping() {
        let w = WeekIndex::containing(d("2020-03-04"));
        assert_eq!(w.start(), d("2020-03-02"));
        assert_eq!(w.next().start(), d("2020-03-09"));
        assert_eq!(w.next().prev(), w);
        assert_eq!(w.days().last(), Some(d("2020-03-08")));
    }

    #[test]
    fn serde_rejects_non_monday() {
        let ok: WeekIndex = serde_json::from_str("\"2020-03-02\"").unwrap();
        assert_eq!(ok.to_string(), "2020-03-02");
        assert!(serde_json::from_str::<WeekIndex>("\"2020-03-03\"").is_err());
    }
}
