//! Seeded synthetic epidemics and coupled search panels with known ground truth.

mod generate;
mod scenario;

pub use generate::{
    generate, logistic_incidence, AppliedInjection, AreaTruth, CaseJump, GroundTruth, InjectionSource, SynthFiles,
    SyntheticWorld,
};
pub use scenario::{
    default_search_params, AnomalyLead, EpidemicParams, Geography, Injection, Mortality, Scenario, SearchParams, Span,
};

use crate::panel::PanelError;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("unknown keyword {0:?}")]
    UnknownKeyword(String),
    #[error("unknown area {0:?}")]
    UnknownArea(String),
    #[error("placed only {placed} of {requested} areas with the requested spacing")]
    Geography { placed: usize, requested: usize },
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
