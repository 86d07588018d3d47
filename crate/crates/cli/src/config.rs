use std::path::{Path, PathBuf};

use anyhow::anyhow;
use serde::{Deserialize, Serialize};
use symwatch::evaluation::{JumpRule, LagParams, SdBaseline};
use symwatch::matching::MatchingParams;
use symwatch::outlier::{DetectConfig, ExceedanceRule, KeywordPair};
use symwatch::panel::{KeywordRegistry, Suppression};
use symwatch::synthgen::Scenario;

use crate::error::{Classify, CliError, CliResult};

/// Overrides `output_dir` from the config file; command-line flags still win.
pub const OUTPUT_DIR_ENV: &str = "SYMWATCH_OUTPUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub min_area_users: u64,
    pub min_cell_users: u64,
    pub min_distance_km: f64,
    pub max_controls: usize,
    pub alert_percentile: f64,
    pub sd_multiplier: f64,
    pub ratio: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            min_area_users: 10_000,
            min_cell_users: 10,
            min_distance_km: 50.0,
            max_controls: 5,
            alert_percentile: 95.0,
            sd_multiplier: 2.0,
            ratio: 2.5,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum JumpRuleKind {
    #[default]
    Ratio,
    Sd,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    #[default]
    Default,
    /// Staggered outbreaks with fever and cough anomalies a week before case jumps.
    Detection,
    /// No epidemic and no coupling.
    Null,
}

/// Inclusive range of lags in weeks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekRange {
    pub min: i64,
    pub max: i64,
}

impl WeekRange {
    pub fn days(&self) -> impl Iterator<Item = i64> {
        (self.min..=self.max).map(|w| 7 * w)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub panel: Option<PathBuf>,
    pub areas: Option<PathBuf>,
    pub cases: Option<PathBuf>,
    pub mortality: Option<PathBuf>,
    /// Output directory of a `detect` run, read by `evaluate` and `report`.
    pub runs: Option<PathBuf>,
    /// Output directory of an `evaluate` run, read by `report`.
    pub evaluation: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub preset: Preset,
    /// Full or partial scenario for `synth`; unset fields come from the preset.
    pub scenario: Option<serde_json::Value>,
    pub thresholds: Thresholds,
    pub keyword_pair: [String; 2],
    pub jump_rule: JumpRuleKind,
    pub sd_baseline: SdBaseline,
    pub exceedance_rule: ExceedanceRule,
    pub correlation: LagParams,
    pub case_lag_weeks: WeekRange,
    pub mortality_lag_weeks: WeekRange,
    pub plots: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            panel: None,
            areas: None,
            cases: None,
            mortality: None,
            runs: None,
            evaluation: None,
            output_dir: PathBuf::from("symwatch-out"),
            seed: 42,
            preset: Preset::Default,
            scenario: None,
            thresholds: Thresholds::default(),
            keyword_pair: ["pyrexia".into(), "cough".into()],
            jump_rule: JumpRuleKind::Ratio,
            sd_baseline: SdBaseline::AreaHistory,
            exceedance_rule: ExceedanceRule::Either,
            correlation: LagParams::default(),
            case_lag_weeks: WeekRange { min: -3, max: 6 },
            mortality_lag_weeks: WeekRange { min: -3, max: 6 },
            plots: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).config(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).config(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self, registry: &KeywordRegistry) -> CliResult<()> {
        let t = &self.thresholds;
        let bad = |m: String| Err(CliError::Config(anyhow!(m)));
        if t.min_area_users == 0 || t.min_cell_users == 0 || t.max_controls == 0 {
            return bad("thresholds.min_area_users, min_cell_users and max_controls must be positive".into());
        }
        for (name, v) in [
            ("min_distance_km", t.min_distance_km),
            ("alert_percentile", t.alert_percentile),
            ("sd_multiplier", t.sd_multiplier),
            ("ratio", t.ratio),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(format!("thresholds.{name} must be positive, got {v}"));
            }
        }
        if t.alert_percentile > 100.0 {
            return bad(format!(
                "thresholds.alert_percentile must be at most 100, got {}",
                t.alert_percentile
            ));
        }
        self.pair(registry)?;
        let c = &self.correlation;
        if c.min_lag_days > c.max_lag_days || c.smoothing_window == 0 {
            return bad("correlation: need min_lag_days <= max_lag_days and a positive smoothing_window".into());
        }
        for (name, r) in [
            ("case_lag_weeks", self.case_lag_weeks),
            ("mortality_lag_weeks", self.mortality_lag_weeks),
        ] {
            if r.min > r.max {
                return bad(format!("{name}: min {} exceeds max {}", r.min, r.max));
            }
        }
        Ok(())
    }

    pub fn pair(&self, registry: &KeywordRegistry) -> CliResult<KeywordPair> {
        let [a, b] = &self.keyword_pair;
        KeywordPair::by_name(registry, a, b).ok_or_else(|| {
            CliError::Config(anyhow!(
                "keyword_pair [{a:?}, {b:?}] must name two distinct registry keywords"
            ))
        })
    }

    pub fn suppression(&self) -> Suppression {
        Suppression {
            min_area_users: self.thresholds.min_area_users,
            min_cell_users: self.thresholds.min_cell_users,
        }
    }

    pub fn detect_config(&self, registry: &KeywordRegistry) -> CliResult<DetectConfig> {
        let t = &self.thresholds;
        let mut c = DetectConfig::new(self.pair(registry)?);
        c.matching = MatchingParams {
            max_controls: t.max_controls,
            min_distance_km: t.min_distance_km,
        };
        c.alert_percentile = t.alert_percentile;
        c.exceedance_sd = t.sd_multiplier;
        c.exceedance_rule = self.exceedance_rule;
        c.rise_ratio = t.ratio;
        Ok(c)
    }

    pub fn jump_rule(&self) -> JumpRule {
        match self.jump_rule {
            JumpRuleKind::Ratio => JumpRule::ratio(self.thresholds.ratio),
            JumpRuleKind::Sd => JumpRule::Sd {
                multiplier: self.thresholds.sd_multiplier,
                baseline: self.sd_baseline,
            },
        }
    }

    /// The preset scenario with `scenario` overrides merged in and the config seed
    /// applied.
    pub fn scenario(&self) -> CliResult<Scenario> {
        let base = match self.preset {
            Preset::Default => Scenario::default(),
            Preset::Detection => Scenario::detection(self.seed),
            Preset::Null => {
                let d = Scenario::default();
                Scenario::null(self.seed, d.n_areas, d.n_weeks)
            }
        };
        let mut s = match &self.scenario {
            None => base,
            Some(overrides) => {
                let mut v = serde_json::to_value(&base).expect("scenario serializes");
                merge(&mut v, overrides);
                serde_json::from_value(v).config(|| "invalid scenario".to_string())?
            }
        };
        s.seed = self.seed;
        Ok(s)
    }

    /// The config as written to output directories: input paths are dropped so the
    /// record does not depend on where inputs live.
    pub fn portable(&self) -> Self {
        Self {
            panel: None,
            areas: None,
            cases: None,
            mortality: None,
            runs: None,
            evaluation: None,
            output_dir: PathBuf::new(),
            ..self.clone()
        }
    }
}

fn merge(base: &mut serde_json::Value, overrides: &serde_json::Value) {
    match (base, overrides) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, o) => *b = o.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_default_thresholds() {
        let t = Thresholds::default();
        assert_eq!((t.min_area_users, t.min_cell_users, t.max_controls), (10_000, 10, 5));
        assert_eq!(
            (t.min_distance_km, t.alert_percentile, t.sd_multiplier, t.ratio),
            (50.0, 95.0, 2.0, 2.5)
        );
        let c: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, RunConfig::default());
    }

    #[test]
    fn partial_scenario_merges_over_preset() {
        let c: RunConfig =
            serde_json::from_str(r#"{"seed": 7, "scenario": {"n_areas": 3, "mortality": {"fatality_rate": 1.0}}}"#)
                .unwrap();
        let s = c.scenario().unwrap();
        assert_eq!((s.seed, s.n_areas, s.n_weeks), (7, 3, 12));
        assert_eq!(s.mortality.fatality_rate, 1.0);
        assert_eq!(s.mortality.lag_weeks, 2);
    }

    #[test]
    fn rejects_unknown_fields_and_bad_pairs() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"threshold": {}}"#).is_err());
        let c: RunConfig = serde_json::from_str(r#"{"keyword_pair": ["cough", "cough"]}"#).unwrap();
        assert!(c.validate(&KeywordRegistry::default()).is_err());
        let c: RunConfig = serde_json::from_str(r#"{"thresholds": {"ratio": 0}}"#).unwrap();
        assert!(c.validate(&KeywordRegistry::default()).is_err());
    }
}
