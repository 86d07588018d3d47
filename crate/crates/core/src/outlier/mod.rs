//! Outlier measures for a pair of consecutive weeks: raw prediction gaps, per-keyword
//! standardization, the fever × cough composite, and percentile alerting.

mod alert;
mod frame;
mod run;

pub use alert::{alert_threshold, percentile, write_alerts_csv, Alert, AlertReport};
pub use frame::{composite_signal, outlier_measure, standardize, Composite, Exclusion, OutlierFrame};
pub use run::{
    composite_scores, run_all_weeks, weekly_run, Counters, DetectConfig, DetectionRun, ExceedanceRule, Unmodeled,
};

use serde::{Deserialize, Serialize};

use crate::matching::MatchingError;
use crate::panel::{KeywordRegistry, WeekIndex};

/// Indices of the two keywords multiplied into the composite signal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordPair {
    pub first: usize,
    pub second: usize,
}

impl KeywordPair {
    /// Fever (pyrexia) and cough.
    pub fn fever_cough(registry: &KeywordRegistry) -> Option<Self> {
        Self::by_name(registry, "pyrexia", "cough")
    }

    pub fn by_name(registry: &KeywordRegistry, first: &str, second: &str) -> Option<Self> {
        let first = registry.resolve(first)?;
        let second = registry.resolve(second)?;
        (first != second).then_some(Self { first, second })
    }

    fn check(&self, n_keywords: usize) -> Result<(), OutlierError> {
        if self.first >= n_keywords || self.second >= n_keywords || self.first == self.second {
            return Err(OutlierError::InvalidPair(*self));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum OutlierError {
    #[error("model for {area_id} was fitted on {fitted}, which does not precede {week_next}")]
    WeekMismatch {
        area_id: String,
        fitted: WeekIndex,
        week_next: WeekIndex,
    },
    #[error("week {0} is not in the panel")]
    MissingWeek(WeekIndex),
    #[error("invalid keyword pair {0:?}")]
    InvalidPair(KeywordPair),
    #[error("composite signal has not been computed")]
    CompositeMissing,
    #[error("percentile {0} outside [0, 100]")]
    InvalidPercentile(f64),
    #[error("empty reference pool for the alert threshold")]
    EmptyReferencePool,
    #[error(transparent)]
    Matching(#[from] MatchingError),
}
