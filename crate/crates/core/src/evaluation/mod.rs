//! Retrospective comparison of search signals with case and mortality data.

mod jumps;
mod lag;
mod roc;
mod smoothing;

pub use jumps::{label_jumps, JumpLabels, JumpRule, SdBaseline};
pub use lag::{
    best_lag_correlation, median_f64, median_lag, median_lag_table, pearson, AreaLag, DailySearch, LagCorrelation,
    LagParams, LagTable, LagTableRow,
};
pub use roc::{
    auc_vs_lag, mann_whitney_auc, peak_lag, roc_auc, roc_curve, trapezoid_area, write_auc_csv, LagAuc, RocResult,
    ScoreMap,
};
pub use smoothing::moving_average;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("empty series")]
    EmptySeries,
    #[error("invalid smoothing window {0}")]
    InvalidWindow(usize),
    #[error("no lag with enough overlapping days")]
    NoValidLag,
    #[error("keyword index {0} out of range")]
    UnknownKeyword(usize),
    #[error("no positive labels at lag {lag_days} days")]
    NoPositives { lag_days: i64 },
    #[error("no negative labels at lag {lag_days} days")]
    NoNegatives { lag_days: i64 },
}
