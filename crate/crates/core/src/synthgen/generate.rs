use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::Duration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Scenario, SearchParams, SynthError};
use crate::evaluation::DailySearch;
use crate::panel::{
    haversine_km, Area, AreaSet, EpiKind, EpiSeries, FractionPanel, KeywordRegistry, QueryPanel, WeekIndex,
};

const STREAM_GEOGRAPHY: u64 = 1;
const STREAM_AREA: u64 = 2;
const STREAM_CASES: u64 = 3;
const STREAM_SEARCH: u64 = 4;
const STREAM_DEATHS: u64 = 5;
const MAX_PLACEMENT_TRIES: usize = 100_000;

fn stream_rng(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 40) | index);
    rng
}

/// Expected daily outbreak cases `t` days after the first panel day under a logistic
/// curve peaking at `peak` on day `midpoint`.
pub fn logistic_incidence(t: f64, peak: f64, growth_rate: f64, midpoint: f64) -> f64 {
    if peak == 0.0 {
        return 0.0;
    }
    let x = (-growth_rate * (t - midpoint)).exp();
    if !x.is_finite() {
        return 0.0;
    }
    peak * 4.0 * x / ((1.0 + x) * (1.0 + x))
}

/// Per-area parameters drawn by the generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaTruth {
    pub area_id: String,
    pub total_users: u64,
    pub scale: f64,
    /// Day offset (from the first panel day) at which incidence is about 1% of peak.
    pub onset_day: f64,
    pub growth_rate: f64,
    pub peak_daily_cases: f64,
    pub background_daily_cases: f64,
    /// Sum of expected daily cases over the panel window.
    pub expected_cases: f64,
    /// Lead in days of each keyword's searches over this area's cases, by keyword name.
    pub keyword_lags: BTreeMap<String, i64>,
    /// Multiplier on each keyword's baseline, in registry order.
    pub keyword_profile: Vec<f64>,
}

impl AreaTruth {
    /// Day offset of the incidence peak.
    pub fn midpoint_day(&self) -> f64 {
        self.onset_day + 400f64.ln() / self.growth_rate
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionSource {
    Explicit,
    AnomalyLead,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppliedInjection {
    pub area_id: String,
    pub week: WeekIndex,
    pub keyword: String,
    pub excess: f64,
    pub source: InjectionSource,
}

/// A realized week-over-week case jump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseJump {
    pub area_id: String,
    pub week: WeekIndex,
    pub previous: u64,
    pub current: u64,
}

/// Everything a test harness needs to know about how a world was generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub start_week: WeekIndex,
    pub n_weeks: usize,
    pub areas: Vec<AreaTruth>,
    pub injections: Vec<AppliedInjection>,
    /// Jumps under the anomaly-lead ratio; empty without an anomaly lead.
    pub case_jumps: Vec<CaseJump>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticWorld {
    pub registry: KeywordRegistry,
    pub areas: AreaSet,
    pub panel: QueryPanel,
    /// Clipped weekly fractions before rounding to counts.
    pub expected_fractions: FractionPanel,
    /// Daily search fractions before weekly aggregation and injections.
    pub daily_search: DailySearch,
    pub cases: EpiSeries,
    pub deaths: EpiSeries,
    pub truth: GroundTruth,
}

/// Paths written by [`SyntheticWorld::write_dir`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SynthFiles {
    pub panel: PathBuf,
    pub areas: PathBuf,
    pub cases: PathBuf,
    pub mortality: PathBuf,
    pub truth: PathBuf,
}

impl SyntheticWorld {
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<SynthFiles, SynthError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let files = SynthFiles {
            panel: dir.join("panel.csv"),
            areas: dir.join("areas.csv"),
            cases: dir.join("cases.csv"),
            mortality: dir.join("mortality.csv"),
            truth: dir.join("truth.json"),
        };
        self.panel.write_csv(std::fs::File::create(&files.panel)?)?;
        self.areas.write_csv(std::fs::File::create(&files.areas)?)?;
        self.cases.write_csv(std::fs::File::create(&files.cases)?)?;
        self.deaths.write_csv(std::fs::File::create(&files.mortality)?)?;
        let mut json = serde_json::to_string_pretty(&self.truth)?;
        json.push('\n');
        std::fs::write(&files.truth, json)?;
        Ok(files)
    }
}

/// Uniform placement inside the scenario box with rejection of points closer than the
/// minimum spacing to an earlier area.
fn place_areas(scenario: &Scenario) -> Result<AreaSet, SynthError> {
    let g = &scenario.geography;
    let mut rng = stream_rng(scenario.seed, STREAM_GEOGRAPHY, 0);
    let mut placed: Vec<(f64, f64)> = Vec::with_capacity(scenario.n_areas);
    for _ in 0..scenario.n_areas {
        let mut ok = false;
        for _ in 0..MAX_PLACEMENT_TRIES {
            let lat = uniform(&mut rng, g.lat.min, g.lat.max);
            let lon = uniform(&mut rng, g.lon.min, g.lon.max);
            if placed
                .iter()
                .all(|(a, b)| haversine_km(lat, lon, *a, *b) >= g.min_spacing_km)
            {
                placed.push((lat, lon));
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(SynthError::Geography {
                placed: placed.len(),
                requested: scenario.n_areas,
            });
        }
    }
    let areas = scenario
        .area_ids()
        .into_iter()
        .zip(placed)
        .enumerate()
        .map(|(i, (id, (lat, lon)))| Area::new(id, format!("Area {}", i + 1), lat, lon))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AreaSet::new(areas)?)
}

fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

fn poisson<R: Rng>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// Days covered by the realized case series: `pre` days before the panel window,
/// the window itself, and `post` days after it.
struct Horizon {
    pre: i64,
    window: i64,
    post: i64,
}

impl Horizon {
    fn len(&self) -> usize {
        (self.pre + self.window + self.post) as usize
    }

    /// Index into the realized series of window day `t`.
    fn at(&self, t: i64) -> usize {
        (t + self.pre) as usize
    }
}

fn horizon(scenario: &Scenario, params: &[SearchParams]) -> Horizon {
    let lead = params
        .iter()
        .map(|p| p.lag_days + p.lag_jitter_days)
        .max()
        .unwrap_or(0)
        .max(0);
    let trail = params
        .iter()
        .map(|p| p.lag_jitter_days - p.lag_days)
        .max()
        .unwrap_or(0)
        .max(0);
    Horizon {
        pre: trail.max(7 * scenario.mortality.lag_weeks),
        window: 7 * scenario.n_weeks as i64,
        post: lead,
    }
}

struct AreaDraw {
    truth: AreaTruth,
    /// Realized daily cases over the horizon.
    cases: Vec<u64>,
    lags: Vec<i64>,
}

fn draw_area(scenario: &Scenario, params: &[SearchParams], h: &Horizon, index: usize, area_id: &str) -> AreaDraw {
    let mut rng = stream_rng(scenario.seed, STREAM_AREA, index as u64);
    let e = &scenario.epidemic;
    let total_users = uniform(&mut rng, scenario.area_users.min, scenario.area_users.max).round() as u64;
    let scale = uniform(&mut rng, scenario.area_scale.min, scenario.area_scale.max);
    let onset_day = 7.0 * uniform(&mut rng, e.onset_week.min, e.onset_week.max);
    let growth_rate = uniform(&mut rng, e.growth_rate.min, e.growth_rate.max);
    let peak = uniform(&mut rng, e.peak_daily_cases.min, e.peak_daily_cases.max);
    let background = uniform(&mut rng, e.background_daily_cases.min, e.background_daily_cases.max);
    let lags: Vec<i64> = params
        .iter()
        .map(|p| {
            if p.lag_jitter_days == 0 {
                p.lag_days
            } else {
                p.lag_days + rng.random_range(-p.lag_jitter_days..=p.lag_jitter_days)
            }
        })
        .collect();
    let profile_noise = Normal::new(0.0, scenario.keyword_profile_sd).expect("non-negative sd");
    let keyword_profile: Vec<f64> = params
        .iter()
        .map(|_| {
            if scenario.keyword_profile_sd > 0.0 {
                (1.0 + profile_noise.sample(&mut rng)).max(0.0)
            } else {
                1.0
            }
        })
        .collect();

    let midpoint = onset_day + 400f64.ln() / growth_rate;
    let incidence = |t: f64| background + logistic_incidence(t, peak, growth_rate, midpoint);
    let mut crng = stream_rng(scenario.seed, STREAM_CASES, index as u64);
    let cases: Vec<u64> = (0..h.len() as i64)
        .map(|i| poisson(&mut crng, incidence((i - h.pre) as f64)))
        .collect();
    let expected_cases = (0..h.window).map(|t| incidence(t as f64)).sum();

    AreaDraw {
        truth: AreaTruth {
            area_id: area_id.to_string(),
            total_users,
            scale,
            onset_day,
            growth_rate,
            peak_daily_cases: peak,
            background_daily_cases: background,
            expected_cases,
            keyword_lags: params.iter().zip(&lags).map(|(p, l)| (p.keyword.clone(), *l)).collect(),
            keyword_profile,
        },
        cases,
        lags,
    }
}

/// Daily search fractions over the panel window, indexed `[keyword][day]`.
fn daily_search(
    scenario: &Scenario,
    params: &[SearchParams],
    h: &Horizon,
    index: usize,
    draw: &AreaDraw,
) -> Vec<Vec<f64>> {
    let mut rng = stream_rng(scenario.seed, STREAM_SEARCH, index as u64);
    let users = draw.truth.total_users as f64;
    params
        .iter()
        .zip(&draw.lags)
        .zip(&draw.truth.keyword_profile)
        .map(|((p, lag), profile)| {
            let base = p.baseline * draw.truth.scale * profile;
            let noise = Normal::new(0.0, p.noise_sd).expect("non-negative sd");
            (0..h.window)
                .map(|t| {
                    let c = draw.cases[h.at(t + lag)] as f64;
                    let eps = if p.noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                    (base + p.gain * c / users + eps).clamp(0.0, 1.0)
                })
                .collect()
        })
        .collect()
}

fn weekly_sums(cases: &[u64], h: &Horizon, n_weeks: usize) -> Vec<u64> {
    (0..n_weeks as i64)
        .map(|w| (0..7).map(|d| cases[h.at(7 * w + d)]).sum())
        .collect()
}

/// Generates a synthetic world. Identical scenarios give identical worlds regardless of
/// thread scheduling.
pub fn generate(scenario: &Scenario) -> Result<SyntheticWorld, SynthError> {
    let registry = KeywordRegistry::default();
    let params = scenario.validate(&registry)?;
    let areas = place_areas(scenario)?;
    let ids = scenario.area_ids();
    let h = horizon(scenario, &params);
    let n_weeks = scenario.n_weeks;
    let start = scenario.start_week;

    let draws: Vec<(AreaDraw, Vec<Vec<f64>>)> = ids
        .par_iter()
        .enumerate()
        .map(|(i, id)| {
            let draw = draw_area(scenario, &params, &h, i, id);
            let search = daily_search(scenario, &params, &h, i, &draw);
            (draw, search)
        })
        .collect();

    let mut injections: Vec<AppliedInjection> = scenario
        .injections
        .iter()
        .map(|inj| AppliedInjection {
            area_id: inj.area_id.clone(),
            week: inj.week,
            keyword: registry
                .name(registry.resolve(&inj.keyword).expect("validated"))
                .to_string(),
            excess: inj.excess,
            source: InjectionSource::Explicit,
        })
        .collect();
    let mut case_jumps = Vec::new();
    if let Some(lead) = &scenario.anomaly_lead {
        for (draw, _) in &draws {
            let weekly = weekly_sums(&draw.cases, &h, n_weeks);
            for w in 1..n_weeks {
                let (prev, cur) = (weekly[w - 1], weekly[w]);
                if prev == 0 || (cur as f64) < lead.ratio * prev as f64 {
                    continue;
                }
                let week = start.plus_weeks(w as i64);
                case_jumps.push(CaseJump {
                    area_id: draw.truth.area_id.clone(),
                    week,
                    previous: prev,
                    current: cur,
                });
                let target = w as i64 - lead.lead_weeks;
                if target < 0 {
                    continue;
                }
                for k in &lead.keywords {
                    injections.push(AppliedInjection {
                        area_id: draw.truth.area_id.clone(),
                        week: start.plus_weeks(target),
                        keyword: registry.name(registry.resolve(k).expect("validated")).to_string(),
                        excess: lead.excess,
                        source: InjectionSource::AnomalyLead,
                    });
                }
            }
        }
    }
    let mut excess: BTreeMap<(&str, WeekIndex, usize), f64> = BTreeMap::new();
    for inj in &injections {
        let k = registry.resolve(&inj.keyword).expect("canonical name");
        *excess.entry((inj.area_id.as_str(), inj.week, k)).or_default() += inj.excess;
    }

    let mut panel = QueryPanel::new(registry.clone());
    let mut expected_fractions = FractionPanel::new(registry.len());
    let mut cases = EpiSeries::new(EpiKind::DailyCases);
    let mut deaths = EpiSeries::new(EpiKind::WeeklyDeaths);
    let mut series = BTreeMap::new();
    for (i, (draw, search)) in draws.iter().enumerate() {
        let id = draw.truth.area_id.as_str();
        let users = draw.truth.total_users;
        for w in 0..n_weeks {
            let week = start.plus_weeks(w as i64);
            let fr: Vec<f64> = search
                .iter()
                .enumerate()
                .map(|(k, daily)| {
                    let mean = daily[7 * w..7 * w + 7].iter().sum::<f64>() / 7.0;
                    let extra = excess.get(&(id, week, k)).copied().unwrap_or(0.0);
                    (mean + extra).clamp(0.0, 1.0)
                })
                .collect();
            for (k, f) in fr.iter().enumerate() {
                panel.insert(week, id, k, (f * users as f64).round() as u64, users)?;
            }
            expected_fractions.insert(week, id, fr)?;
        }
        for t in 0..h.window {
            cases.insert(start.start() + Duration::days(t), id, draw.cases[h.at(t)])?;
        }
        let mut drng = stream_rng(scenario.seed, STREAM_DEATHS, i as u64);
        let lag = scenario.mortality.lag_weeks;
        for w in 0..n_weeks as i64 {
            let source: u64 = (0..7).map(|d| draw.cases[h.at(7 * (w - lag) + d)]).sum();
            let d = poisson(&mut drng, scenario.mortality.fatality_rate * source as f64);
            deaths.insert(start.plus_weeks(w).start(), id, d)?;
        }
        series.insert(id.to_string(), search.clone());
    }

    Ok(SyntheticWorld {
        registry,
        areas,
        panel,
        expected_fractions,
        daily_search: DailySearch {
            start: start.start(),
            n_days: h.window as usize,
            series,
        },
        cases,
        deaths,
        truth: GroundTruth {
            seed: scenario.seed,
            start_week: start,
            n_weeks,
            areas: draws.into_iter().map(|(d, _)| d.truth).collect(),
            injections,
            case_jumps,
        },
    })
}
