use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Deserialize;

use super::{csv_line, KeywordRegistry, PanelError, WeekIndex};

/// Counts for one area in one week.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AreaWeek {
    pub total_users: u64,
    /// Users querying each registered keyword; `None` where no row was supplied.
    pub counts: Vec<Option<u64>>,
}

impl AreaWeek {
    fn fractions(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|c| match c {
                Some(n) if self.total_users > 0 => *n as f64 / self.total_users as f64,
                _ => 0.0,
            })
            .collect()
    }
}

/// Privacy thresholds. Strictly-below values are removed (areas) or zeroed (cells).
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, Deserialize)]
pub struct Suppression {
    pub min_area_users: u64,
    pub min_cell_users: u64,
}

impl Default for Suppression {
    fn default() -> Self {
        Self {
            min_area_users: 10_000,
            min_cell_users: 10,
        }
    }
}

/// Weekly per-area per-keyword user counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryPanel {
    registry: KeywordRegistry,
    rows: BTreeMap<(WeekIndex, String), AreaWeek>,
}

#[derive(Debug, Deserialize)]
struct PanelRow {
    week_start: NaiveDate,
    area_id: String,
    keyword: String,
    users_querying: u64,
    total_users: u64,
}

pub(crate) const PANEL_HEADER: [&str; 5] = ["week_start", "area_id", "keyword", "users_querying", "total_users"];

impl QueryPanel {
    pub fn new(registry: KeywordRegistry) -> Self {
        Self {
            registry,
            rows: BTreeMap::new(),
        }
    }

    pub fn registry(&self) -> &KeywordRegistry {
        &self.registry
    }

    /// Records one cell. The area-week total must agree with earlier cells of the same
    /// area-week.
    pub fn insert(
        &mut self,
        week: WeekIndex,
        area_id: &str,
        keyword: usize,
        users_querying: u64,
        total_users: u64,
    ) -> Result<(), PanelError> {
        if keyword >= self.registry.len() {
            return Err(PanelError::UnknownKeyword(keyword.to_string()));
        }
        if users_querying > total_users {
            return Err(PanelError::CountExceedsTotal {
                week,
                area_id: area_id.to_string(),
                users_querying,
                total_users,
            });
        }
        let n = self.registry.len();
        let entry = self
            .rows
            .entry((week, area_id.to_string()))
            .or_insert_with(|| AreaWeek {
                total_users,
                counts: vec![None; n],
            });
        if entry.total_users != total_users {
            return Err(PanelError::InconsistentTotal {
                week,
                area_id: area_id.to_string(),
                first: entry.total_users,
                second: total_users,
            });
        }
        if entry.counts[keyword].is_some() {
            return Err(PanelError::DuplicateCell {
                week,
                area_id: area_id.to_string(),
                keyword: self.registry.name(keyword).to_string(),
            });
        }
        entry.counts[keyword] = Some(users_querying);
        Ok(())
    }

    pub fn get(&self, week: WeekIndex, area_id: &str) -> Option<&AreaWeek> {
        self.rows.get(&(week, area_id.to_string()))
    }

    /// Number of populated (week, area, keyword) cells.
    pub fn n_cells(&self) -> usize {
        self.rows
            .values()
            .map(|r| r.counts.iter().filter(|c| c.is_some()).count())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Distinct weeks in ascending order.
    pub fn weeks(&self) -> Vec<WeekIndex> {
        let mut weeks: Vec<WeekIndex> = self.rows.keys().map(|(w, _)| *w).collect();
        weeks.dedup();
        weeks
    }

    /// Areas with data in `week`, in id order.
    pub fn areas_in(&self, week: WeekIndex) -> Vec<&str> {
        self.rows
            .range((week, String::new())..)
            .take_while(|((w, _), _)| *w == week)
            .map(|((_, a), _)| a.as_str())
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (WeekIndex, &str, &AreaWeek)> {
        self.rows.iter().map(|((w, a), r)| (*w, a.as_str(), r))
    }

    /// Keyword fractions for one area-week, with absent or suppressed cells as zero.
    pub fn fractions(&self, week: WeekIndex, area_id: &str) -> Result<Vec<f64>, PanelError> {
        self.get(week, area_id)
            .map(AreaWeek::fractions)
            .ok_or_else(|| PanelError::AreaAbsent {
                week,
                area_id: area_id.to_string(),
            })
    }

    /// Drops area-weeks below `min_area_users` and zeroes cells below `min_cell_users`.
    pub fn apply_suppression(&self, rule: &Suppression) -> QueryPanel {
        let rows = self
            .rows
            .iter()
            .filter(|(_, r)| r.total_users >= rule.min_area_users)
            .map(|(k, r)| {
                let counts = r
                    .counts
                    .iter()
                    .map(|c| c.map(|n| if n < rule.min_cell_users { 0 } else { n }))
                    .collect();
                (
                    k.clone(),
                    AreaWeek {
                        total_users: r.total_users,
                        counts,
                    },
                )
            })
            .collect();
        QueryPanel {
            registry: self.registry.clone(),
            rows,
        }
    }

    pub fn to_fractions(&self) -> FractionPanel {
        let mut out = FractionPanel::new(self.registry.len());
        for ((w, a), r) in &self.rows {
            out.insert(*w, a, r.fractions())
                .expect("vector length matches registry");
        }
        out
    }

    pub fn load_csv(path: impl AsRef<Path>, registry: KeywordRegistry) -> Result<Self, PanelError> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::read_csv(file, registry)
    }

    /// Reads `week_start,area_id,keyword,users_querying,total_users` rows.
    pub fn read_csv<R: Read>(reader: R, registry: KeywordRegistry) -> Result<Self, PanelError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        super::require_headers(&headers, &PANEL_HEADER)?;
        let mut panel = QueryPanel::new(registry);
        for rec in rdr.records() {
            let rec = rec?;
            let line = csv_line(&rec);
            let row: PanelRow = rec.deserialize(Some(&headers)).map_err(|e| PanelError::Malformed {
                line,
                message: e.to_string(),
            })?;
            let week = WeekIndex::new(row.week_start).map_err(|e| PanelError::Malformed {
                line,
                message: e.to_string(),
            })?;
            let kw = panel
                .registry
                .resolve(&row.keyword)
                .ok_or_else(|| PanelError::UnknownKeyword(row.keyword.clone()))?;
            panel
                .insert(week, &row.area_id, kw, row.users_querying, row.total_users)
                .map_err(|e| match e {
                    PanelError::CountExceedsTotal { .. } | PanelError::InconsistentTotal { .. } => {
                        PanelError::Malformed {
                            line,
                            message: e.to_string(),
                        }
                    }
                    other => other,
                })?;
        }
        Ok(panel)
    }

    /// Writes every populated cell in (week, area, keyword-registry) order.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), PanelError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(PANEL_HEADER)?;
        for ((week, area), r) in &self.rows {
            let week = week.to_string();
            let total = r.total_users.to_string();
            for (k, c) in r.counts.iter().enumerate() {
                if let Some(n) = c {
                    w.write_record([
                        week.as_str(),
                        area.as_str(),
                        self.registry.name(k),
                        &n.to_string(),
                        &total,
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Dense keyword-fraction vectors per (week, area); the input to matching and
/// outlier computation.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionPanel {
    n_keywords: usize,
    rows: BTreeMap<WeekIndex, BTreeMap<String, Vec<f64>>>,
}

impl FractionPanel {
    pub fn new(n_keywords: usize) -> Self {
        Self {
            n_keywords,
            rows: BTreeMap::new(),
        }
    }

    pub fn n_keywords(&self) -> usize {
        self.n_keywords
    }

    pub fn insert(&mut self, week: WeekIndex, area_id: &str, fractions: Vec<f64>) -> Result<(), PanelError> {
        if fractions.len() != self.n_keywords {
            return Err(PanelError::KeywordCount {
                expected: self.n_keywords,
                found: fractions.len(),
            });
        }
        self.rows
            .entry(week)
            .or_default()
            .insert(area_id.to_string(), fractions);
        Ok(())
    }

    pub fn get(&self, week: WeekIndex, area_id: &str) -> Option<&[f64]> {
        self.rows.get(&week).and_then(|m| m.get(area_id)).map(Vec::as_slice)
    }

    pub fn contains_week(&self, week: WeekIndex) -> bool {
        self.rows.contains_key(&week)
    }

    pub fn weeks(&self) -> Vec<WeekIndex> {
        self.rows.keys().copied().collect()
    }

    pub fn areas_in(&self, week: WeekIndex) -> impl Iterator<Item = &str> {
        self.rows
            .get(&week)
            .into_iter()
            .flat_map(|m| m.keys().map(String::as_str))
    }

    /// Every fraction multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|(w, m)| {
                let m = m
                    .iter()
                    .map(|(a, v)| (a.clone(), v.iter().map(|x| x * c).collect()))
                    .collect();
                (*w, m)
            })
            .collect();
        Self {
            n_keywords: self.n_keywords,
            rows,
        }
    }
}
