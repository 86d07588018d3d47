use crate::evaluation::EvalError;
use crate::matching::MatchingError;
use crate::outlier::OutlierError;
use crate::panel::PanelError;
use crate::synthgen::SynthError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Panel(#[from] PanelError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Outlier(#[from] OutlierError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}
