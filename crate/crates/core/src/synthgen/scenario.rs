use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::panel::{KeywordRegistry, WeekIndex};

/// Closed interval that per-area parameters are drawn from uniformly. `min == max`
/// pins the value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub min: f64,
    pub max: f64,
}

impl Span {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { min: v, max: v }
    }

    fn check(&self, what: &str, lower: f64) -> Result<(), SynthError> {
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max || self.min < lower {
            return Err(SynthError::InvalidScenario(format!(
                "{what}: invalid range [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Bounding box for area centroids.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Geography {
    pub lat: Span,
    pub lon: Span,
    pub min_spacing_km: f64,
}

impl Default for Geography {
    /// Roughly England.
    fn default() -> Self {
        Self {
            lat: Span::new(50.5, 55.0),
            lon: Span::new(-5.5, 1.5),
            min_spacing_km: 15.0,
        }
    }
}

/// Logistic epidemic parameters, drawn per area.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpidemicParams {
    /// Week (relative to the first panel week, fractional) at which incidence reaches
    /// about 1% of its peak.
    pub onset_week: Span,
    /// Early exponential growth rate per day.
    pub growth_rate: Span,
    /// Peak expected daily cases of the outbreak.
    pub peak_daily_cases: Span,
    /// Constant expected daily cases on top of the outbreak.
    #[serde(default = "zero_span")]
    pub background_daily_cases: Span,
}

fn zero_span() -> Span {
    Span::fixed(0.0)
}

impl Default for EpidemicParams {
    fn default() -> Self {
        Self {
            onset_week: Span::new(-2.0, 6.0),
            growth_rate: Span::new(0.08, 0.25),
            peak_daily_cases: Span::new(20.0, 200.0),
            background_daily_cases: Span::fixed(0.0),
        }
    }
}

/// How one keyword's daily search fraction is generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub keyword: String,
    /// Fraction with no epidemic, before the per-area scale.
    pub baseline: f64,
    /// Added fraction per unit of per-capita daily incidence `lag_days` ahead.
    pub gain: f64,
    /// Days by which searches lead cases.
    pub lag_days: i64,
    /// Per-area lags are drawn uniformly from `lag_days ± lag_jitter_days`.
    pub lag_jitter_days: i64,
    /// SD of Gaussian noise on the daily fraction.
    pub noise_sd: f64,
}

/// Fixed excess added to a weekly fraction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub area_id: String,
    pub week: WeekIndex,
    pub keyword: String,
    pub excess: f64,
}

/// Adds `excess` to each listed keyword `lead_weeks` before every realized case jump
/// (weekly count at least `ratio` times a positive previous week).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnomalyLead {
    pub lead_weeks: i64,
    pub ratio: f64,
    pub keywords: Vec<String>,
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Mortality {
    /// Expected deaths per case.
    pub fatality_rate: f64,
    /// Weeks from a case to the corresponding death.
    pub lag_weeks: i64,
}

impl Default for Mortality {
    fn default() -> Self {
        Self {
            fatality_rate: 0.05,
            lag_weeks: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub seed: u64,
    pub n_areas: usize,
    pub n_weeks: usize,
    pub start_week: WeekIndex,
    pub geography: Geography,
    pub area_users: Span,
    /// Per-area multiplier on every keyword baseline.
    pub area_scale: Span,
    /// SD of a fixed per-area, per-keyword relative deviation from the keyword
    /// baseline, so areas differ in their mix of searches.
    pub keyword_profile_sd: f64,
    pub epidemic: EpidemicParams,
    /// One entry per registry keyword.
    pub keywords: Vec<SearchParams>,
    pub injections: Vec<Injection>,
    pub anomaly_lead: Option<AnomalyLead>,
    pub mortality: Mortality,
}

/// Lead in days per keyword for the default search model; keywords without an entry
/// are not coupled to incidence.
const DEFAULT_LAGS: [(&str, i64); 13] = [
    ("chest pain", 13),
    ("cough", 17),
    ("diarrhea", 22),
    ("fatigue", -13),
    ("pyrexia", 16),
    ("head ache", 13),
    ("nausea", -4),
    ("pneumonia", 34),
    ("rash", -8),
    ("seizure", 6),
    ("sternutation", 4),
    ("sore throat", 19),
    ("vomiting", 15),
];

/// Default search parameters for every keyword in `registry`.
pub fn default_search_params(registry: &KeywordRegistry) -> Vec<SearchParams> {
    registry
        .names()
        .into_iter()
        .enumerate()
        .map(|(i, name)| {
            let baseline = 0.001 * (1.0 + ((i * 7) % 11) as f64);
            let lag = DEFAULT_LAGS.iter().find(|(n, _)| *n == name).map(|(_, l)| *l);
            SearchParams {
                keyword: name,
                baseline,
                gain: if lag.is_some() { 0.5 } else { 0.0 },
                lag_days: lag.unwrap_or(0),
                lag_jitter_days: 0,
                noise_sd: 0.03 * baseline,
            }
        })
        .collect()
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            seed: 42,
            n_areas: 20,
            n_weeks: 12,
            start_week: WeekIndex::new(NaiveDate::from_ymd_opt(2020, 3, 2).expect("valid date")).expect("a Monday"),
            geography: Geography::default(),
            area_users: Span::new(50_000.0, 500_000.0),
            area_scale: Span::new(0.8, 1.25),
            keyword_profile_sd: 0.0,
            epidemic: EpidemicParams::default(),
            keywords: default_search_params(&KeywordRegistry::default()),
            injections: Vec::new(),
            anomaly_lead: None,
            mortality: Mortality::default(),
        }
    }
}

impl Scenario {
    /// No epidemic, no coupling, no injections: i.i.d. noise around per-area baselines.
    pub fn null(seed: u64, n_areas: usize, n_weeks: usize) -> Self {
        let mut s = Self {
            seed,
            n_areas,
            n_weeks,
            ..Self::default()
        };
        s.epidemic.peak_daily_cases = Span::fixed(0.0);
        s.epidemic.background_daily_cases = Span::fixed(0.0);
        for k in &mut s.keywords {
            k.gain = 0.0;
        }
        s
    }

    /// Sparse, staggered outbreaks over a steady background, no search coupling, and
    /// fever and cough excess injected one week before every 2.5× weekly case jump.
    pub fn detection(seed: u64) -> Self {
        let mut s = Self {
            seed,
            n_areas: 30,
            n_weeks: 12,
            ..Self::default()
        };
        s.epidemic = EpidemicParams {
            onset_week: Span::new(0.0, 24.0),
            growth_rate: Span::new(0.2, 0.3),
            peak_daily_cases: Span::new(100.0, 400.0),
            background_daily_cases: Span::fixed(10.0),
        };
        for k in &mut s.keywords {
            k.gain = 0.0;
        }
        s.anomaly_lead = Some(AnomalyLead {
            lead_weeks: 1,
            ratio: 2.5,
            keywords: vec!["pyrexia".into(), "cough".into()],
            excess: 0.002,
        });
        s
    }

    /// Area identifiers in generation order.
    pub fn area_ids(&self) -> Vec<String> {
        let width = self.n_areas.to_string().len().max(3);
        (1..=self.n_areas).map(|i| format!("A{i:0width$}")).collect()
    }

    pub fn keyword_mut(&mut self, name: &str) -> Option<&mut SearchParams> {
        self.keywords.iter_mut().find(|k| k.keyword == name)
    }

    /// Checks ranges and that keyword, area and week references resolve. Returns the
    /// search parameters reordered to match `registry`.
    pub fn validate(&self, registry: &KeywordRegistry) -> Result<Vec<SearchParams>, SynthError> {
        let bad = |m: String| Err(SynthError::InvalidScenario(m));
        if self.n_areas == 0 {
            return bad("n_areas must be at least 1".into());
        }
        if self.n_weeks == 0 {
            return bad("n_weeks must be at least 1".into());
        }
        self.geography.lat.check("geography.lat", -90.0)?;
        self.geography.lon.check("geography.lon", -180.0)?;
        if self.geography.lat.max > 90.0 || self.geography.lon.max > 180.0 {
            return bad("geography outside valid coordinates".into());
        }
        if self.geography.min_spacing_km.is_nan() || self.geography.min_spacing_km < 0.0 {
            return bad("geography.min_spacing_km must be non-negative".into());
        }
        self.area_users.check("area_users", 1.0)?;
        self.area_scale.check("area_scale", 0.0)?;
        self.epidemic.onset_week.check("epidemic.onset_week", f64::MIN)?;
        self.epidemic.growth_rate.check("epidemic.growth_rate", 0.0)?;
        if self.epidemic.growth_rate.min <= 0.0 {
            return bad("epidemic.growth_rate must be positive".into());
        }
        self.epidemic.peak_daily_cases.check("epidemic.peak_daily_cases", 0.0)?;
        self.epidemic
            .background_daily_cases
            .check("epidemic.background_daily_cases", 0.0)?;
        if !(self.keyword_profile_sd >= 0.0 && self.keyword_profile_sd.is_finite()) {
            return bad("keyword_profile_sd must be non-negative".into());
        }
        if !(self.mortality.fatality_rate >= 0.0 && self.mortality.fatality_rate.is_finite()) {
            return bad("mortality.fatality_rate must be non-negative".into());
        }
        if self.mortality.lag_weeks < 0 {
            return bad("mortality.lag_weeks must be non-negative".into());
        }

        let mut ordered: Vec<Option<SearchParams>> = vec![None; registry.len()];
        for p in &self.keywords {
            let i = registry
                .resolve(&p.keyword)
                .ok_or_else(|| SynthError::UnknownKeyword(p.keyword.clone()))?;
            if ordered[i].is_some() {
                return bad(format!("keyword {:?} listed twice", p.keyword));
            }
            let finite = [p.baseline, p.gain, p.noise_sd]
                .iter()
                .all(|v| v.is_finite() && *v >= 0.0);
            if !finite || p.baseline > 1.0 || p.lag_jitter_days < 0 {
                return bad(format!("keyword {:?}: invalid search parameters", p.keyword));
            }
            ordered[i] = Some(p.clone());
        }
        let ordered: Vec<SearchParams> = ordered
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                p.ok_or_else(|| {
                    SynthError::InvalidScenario(format!("keyword {:?} has no search parameters", registry.name(i)))
                })
            })
            .collect::<Result<_, _>>()?;

        let ids = self.area_ids();
        let last_week = self.start_week.plus_weeks(self.n_weeks as i64 - 1);
        for inj in &self.injections {
            if !ids.contains(&inj.area_id) {
                return Err(SynthError::UnknownArea(inj.area_id.clone()));
            }
            if inj.week < self.start_week || inj.week > last_week {
                return bad(format!("injection week {} outside the scenario", inj.week));
            }
            registry
                .resolve(&inj.keyword)
                .ok_or_else(|| SynthError::UnknownKeyword(inj.keyword.clone()))?;
            if !inj.excess.is_finite() {
                return bad("injection excess must be finite".into());
            }
        }
        if let Some(lead) = &self.anomaly_lead {
            if lead.lead_weeks < 0 || lead.ratio.is_nan() || lead.ratio <= 0.0 || !lead.excess.is_finite() {
                return bad("invalid anomaly_lead parameters".into());
            }
            for k in &lead.keywords {
                registry
                    .resolve(k)
                    .ok_or_else(|| SynthError::UnknownKeyword(k.clone()))?;
            }
        }
        Ok(ordered)
    }
}
