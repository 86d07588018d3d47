use serde::{Deserialize, Serialize};

use super::{fit_linear, LinearFit, MatchingError};
use crate::panel::{distance_km, AreaSet, FractionPanel, WeekIndex};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingParams {
    pub max_controls: usize,
    pub min_distance_km: f64,
}

impl Default for MatchingParams {
    fn default() -> Self {
        Self {
            max_controls: 5,
            min_distance_km: 50.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelFlags {
    /// The final fit had dependent controls and used the minimum-norm solution.
    pub rank_deficient: bool,
    /// Fewer than `max_controls` eligible candidates existed.
    pub fewer_controls: bool,
}

/// A target area's selected controls and the linear map fitted on `week_fitted`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlModel {
    pub target: String,
    pub week_fitted: WeekIndex,
    pub controls: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub r2: f64,
    /// R² after each greedy addition.
    pub r2_path: Vec<f64>,
    pub flags: ModelFlags,
}

impl ControlModel {
    pub fn predict(&self, panel: &FractionPanel, week: WeekIndex) -> Result<Vec<f64>, MatchingError> {
        predict(self, panel, week)
    }
}

/// Areas present in `week`, other than the target, at least `min_distance_km` away,
/// in id order.
pub fn eligible_candidates<'a>(
    panel: &'a FractionPanel,
    areas: &AreaSet,
    week: WeekIndex,
    target: &str,
    min_distance_km: f64,
) -> Result<Vec<&'a str>, MatchingError> {
    let t = areas
        .get(target)
        .ok_or_else(|| MatchingError::UnknownArea(target.to_string()))?;
    let mut out = Vec::new();
    for id in panel.areas_in(week) {
        if id == target {
            continue;
        }
        let a = areas
            .get(id)
            .ok_or_else(|| MatchingError::UnknownArea(id.to_string()))?;
        if distance_km(t, a) >= min_distance_km {
            out.push(id);
        }
    }
    Ok(out)
}

/// Greedy forward selection: start empty and repeatedly add the eligible candidate whose
/// inclusion gives the highest in-sample R² over the keyword vector of `week`. Ties go
/// to the smallest area id.
pub fn greedy_select(
    panel: &FractionPanel,
    areas: &AreaSet,
    week: WeekIndex,
    target: &str,
    params: &MatchingParams,
) -> Result<ControlModel, MatchingError> {
    if params.max_controls == 0 || params.min_distance_km.is_nan() {
        return Err(MatchingError::InvalidParams(format!("{params:?}")));
    }
    let y = panel.get(week, target).ok_or_else(|| MatchingError::TargetAbsent {
        target: target.to_string(),
        week,
    })?;
    let mut remaining = eligible_candidates(panel, areas, week, target, params.min_distance_km)?;
    if remaining.is_empty() {
        return Err(MatchingError::NoEligibleCandidates {
            target: target.to_string(),
            week,
            min_distance_km: params.min_distance_km,
        });
    }
    let fewer_controls = remaining.len() < params.max_controls;
    let max_regressors = y.len().saturating_sub(2);
    let steps = params.max_controls.min(remaining.len()).min(max_regressors);

    let mut chosen: Vec<&str> = Vec::with_capacity(steps);
    let mut columns: Vec<&[f64]> = Vec::with_capacity(steps + 1);
    let mut r2_path = Vec::with_capacity(steps);
    let mut last_fit: Option<LinearFit> = None;

    for _ in 0..steps {
        let mut best: Option<(usize, LinearFit)> = None;
        for (i, cand) in remaining.iter().enumerate() {
            let x = panel.get(week, cand).expect("candidate present in week");
            columns.push(x);
            let fit = fit_linear(&columns, y)?;
            columns.pop();
            // `remaining` is id-sorted, so strict improvement keeps the smallest id on ties.
            if best.as_ref().is_none_or(|(_, b)| fit.r2 > b.r2) {
                best = Some((i, fit));
            }
        }
        let (i, fit) = best.expect("at least one candidate");
        let id = remaining.remove(i);
        columns.push(panel.get(week, id).expect("candidate present in week"));
        chosen.push(id);
        r2_path.push(fit.r2);
        last_fit = Some(fit);
    }

    let fit = last_fit.expect("at least one step");
    Ok(ControlModel {
        target: target.to_string(),
        week_fitted: week,
        controls: chosen.into_iter().map(str::to_string).collect(),
        coefficients: fit.coefficients,
        intercept: fit.intercept,
        r2: fit.r2,
        r2_path,
        flags: ModelFlags {
            rank_deficient: fit.rank_deficient,
            fewer_controls,
        },
    })
}

/// Applies a fitted model to the controls' fractions in `week`. Predictions are not
/// clamped and may be negative.
pub fn predict(model: &ControlModel, panel: &FractionPanel, week: WeekIndex) -> Result<Vec<f64>, MatchingError> {
    let mut out = vec![model.intercept; panel.n_keywords()];
    for (control, beta) in model.controls.iter().zip(&model.coefficients) {
        let x = panel.get(week, control).ok_or_else(|| MatchingError::ControlAbsent {
            target: model.target.clone(),
            control: control.clone(),
            week,
        })?;
        for (o, v) in out.iter_mut().zip(x) {
            *o += beta * v;
        }
    }
    Ok(out)
}
