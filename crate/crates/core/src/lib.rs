//! Regional outbreak detection from symptom search rates.
//!
//! For each area, a linear model over up to five distant control areas predicts next
//! week's symptom-query fractions. The gap between actual and predicted fractions,
//! standardized per keyword, is the outlier measure; the product of the fever and cough
//! measures is the composite alerting signal. The [`evaluation`] module scores those
//! signals against case and mortality jumps, and [`synthgen`] produces seeded synthetic
//! worlds with known ground truth.

pub mod evaluation;
pub mod matching;
pub mod outlier;
pub mod panel;
pub mod synthgen;

mod error;

pub use error::Error;
