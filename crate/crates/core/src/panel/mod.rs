//! Data model and ingestion: keywords, areas, weekly query panels, epidemic series.

mod area;
mod epi;
mod keyword;
mod query;
mod week;

use chrono::NaiveDate;

pub use area::{distance_km, haversine_km, Area, AreaSet};
pub use epi::{EpiKind, EpiSeries, WindowCounts};
pub use keyword::{Keyword, KeywordRegistry};
pub use query::{AreaWeek, FractionPanel, QueryPanel, Suppression};
pub use week::{NotMonday, WeekIndex};

#[derive(Debug, thiserror::Error)]
pub enum PanelError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column {0:?}")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("unknown keyword {0:?}")]
    UnknownKeyword(String),
    #[error("duplicate row for week {week}, area {area_id}, keyword {keyword}")]
    DuplicateCell {
        week: WeekIndex,
        area_id: String,
        keyword: String,
    },
    #[error("week {week}, area {area_id}: {users_querying} users querying exceeds total {total_users}")]
    CountExceedsTotal {
        week: WeekIndex,
        area_id: String,
        users_querying: u64,
        total_users: u64,
    },
    #[error("week {week}, area {area_id}: total_users {first} conflicts with {second}")]
    InconsistentTotal {
        week: WeekIndex,
        area_id: String,
        first: u64,
        second: u64,
    },
    #[error("area {area_id} has no data in week {week}")]
    AreaAbsent { week: WeekIndex, area_id: String },
    #[error("duplicate area {0}")]
    DuplicateArea(String),
    #[error("area {area_id}: invalid coordinates ({latitude}, {longitude})")]
    InvalidCoordinates {
        area_id: String,
        latitude: f64,
        longitude: f64,
    },
    #[error("area {area_id}: duplicate date {date}")]
    DuplicateDate { area_id: String, date: NaiveDate },
    #[error("expected {expected} keyword values, found {found}")]
    KeywordCount { expected: usize, found: usize },
    #[error(transparent)]
    NotMonday(#[from] NotMonday),
}

pub(crate) fn csv_line(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

pub(crate) fn require_headers(headers: &csv::StringRecord, required: &[&str]) -> Result<(), PanelError> {
    for col in required {
        if !headers.iter().any(|h| h == *col) {
            return Err(PanelError::MissingColumn((*col).to_string()));
        }
    }
    Ok(())
}
