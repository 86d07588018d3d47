//! Control-area matching: greedy forward selection of distant areas whose same-week
//! keyword fractions linearly predict a target area's fractions.

mod greedy;
mod lstsq;

pub use greedy::{eligible_candidates, greedy_select, predict, ControlModel, MatchingParams, ModelFlags};
pub use lstsq::{fit_linear, r_squared, LinearFit};

use crate::panel::WeekIndex;

#[derive(Debug, thiserror::Error)]
pub enum MatchingError {
    #[error("need more observations than regressors + 1 (observations {observations}, regressors {regressors})")]
    TooFewObservations { observations: usize, regressors: usize },
    #[error("column length {found} does not match target length {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("non-finite value in regression input")]
    NonFinite,
    #[error("area {0} is not in the area registry")]
    UnknownArea(String),
    #[error("target {target} has no data in week {week}")]
    TargetAbsent { target: String, week: WeekIndex },
    #[error("no eligible candidates for target {target} in week {week} (need data that week and distance >= {min_distance_km} km)")]
    NoEligibleCandidates {
        target: String,
        week: WeekIndex,
        min_distance_km: f64,
    },
    #[error("control {control} has no data in week {week}; the model for {target} cannot be applied")]
    ControlAbsent {
        target: String,
        control: String,
        week: WeekIndex,
    },
    #[error("invalid matching parameters: {0}")]
    InvalidParams(String),
}
