use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{csv_line, PanelError};

const EARTH_RADIUS_KM: f64 = 6371.0;

/// A geographic unit of analysis with its centroid coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub area_id: String,
    pub name: String,
    pub latitude: f64,
    pub longitude: f64,
}

impl Area {
    pub fn new(
        area_id: impl Into<String>,
        name: impl Into<String>,
        latitude: f64,
        longitude: f64,
    ) -> Result<Self, PanelError> {
        let area_id = area_id.into();
        if !(-90.0..=90.0).contains(&latitude) || !(-180.0..=180.0).contains(&longitude) {
            return Err(PanelError::InvalidCoordinates {
                area_id,
                latitude,
                longitude,
            });
        }
        Ok(Self {
            area_id,
            name: name.into(),
            latitude,
            longitude,
        })
    }
}

/// Great-circle distance between two (lat, lon) points in degrees.
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dlat = (lat2 - lat1).to_radians();
    let dlon = (lon2 - lon1).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Haversine distance between two area centroids.
pub fn distance_km(a: &Area, b: &Area) -> f64 {
    haversine_km(a.latitude, a.longitude, b.latitude, b.longitude)
}

#[derive(Debug, Deserialize)]
struct AreaRow {
    area_id: String,
    name: String,
    latitude: f64,
    longitude: f64,
}

/// Areas keyed by id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AreaSet {
    areas: BTreeMap<String, Area>,
}

impl AreaSet {
    pub fn new(areas: impl IntoIterator<Item = Area>) -> Result<Self, PanelError> {
        let mut set = Self::default();
        for a in areas {
            set.insert(a)?;
        }
        Ok(set)
    }

    pub fn insert(&mut self, area: Area) -> Result<(), PanelError> {
        if self.areas.contains_key(&area.area_id) {
            return Err(PanelError::DuplicateArea(area.area_id));
        }
        self.areas.insert(area.area_id.clone(), area);
        Ok(())
    }

    pub fn get(&self, area_id: &str) -> Option<&Area> {
        self.areas.get(area_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Area> {
        self.areas.values()
    }

    pub fn len(&self) -> usize {
        self.areas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.areas.is_empty()
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, PanelError> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::read_csv(file)
    }

    /// Reads `area_id,name,latitude,longitude` rows.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self, PanelError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        super::require_headers(&headers, &["area_id", "name", "latitude", "longitude"])?;
        let mut set = Self::default();
        for rec in rdr.records() {
            let rec = rec?;
            let line = csv_line(&rec);
            let row: AreaRow = rec.deserialize(Some(&headers)).map_err(|e| PanelError::Malformed {
                line,
                message: e.to_string(),
            })?;
            set.insert(Area::new(row.area_id, row.name, row.latitude, row.longitude)?)?;
        }
        Ok(set)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), PanelError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["area_id", "name", "latitude", "longitude"])?;
        for a in self.areas.values() {
            w.write_record([
                a.area_id.as_str(),
                a.name.as_str(),
                &a.latitude.to_string(),
                &a.longitude.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Independent spherical-law-of-cosines route, used only as a check.
    fn cosine_law_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
        let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
        let c = p1.sin() * p2.sin() + p1.cos() * p2.cos() * (lon2 - lon1).to_radians().cos();
        EARTH_RADIUS_KM * c.clamp(-1.0, 1.0).acos()
    }

    #[test]
    fn london_manchester() {
        let d = haversine_km(51.5074, -0.1278, 53.4808, -2.2426);
        assert!((d - 262.4).abs() < 1.0, "{d}");
        assert!((d - cosine_law_km(51.5074, -0.1278, 53.4808, -2.2426)).abs() < 1e-6);
    }

    #[test]
    fn identity_is_zero() {
        let a = Area::new("A", "a", 52.0, -1.0).unwrap();
        assert_eq!(distance_km(&a, &a), 0.0);
    }

    #[test]
    fn rejects_bad_coordinates() {
        assert!(Area::new("A", "a", 91.0, 0.0).is_err());
        assert!(Area::new("A", "a", 0.0, -180.5).is_err());
    }

    #[test]
    fn csv_round_trip_and_duplicates() {
        let text = "area_id,name,latitude,longitude\nE1,One,51.5,-0.1\nE2,Two,53.4,-2.2\n";
        let set = AreaSet::read_csv(text.as_bytes()).unwrap();
        assert_eq!(set.len(), 2);
        let mut buf = Vec::new();
        set.write_csv(&mut buf).unwrap();
        assert_eq!(AreaSet::read_csv(buf.as_slice()).unwrap(), set);

        let dup = "area_id,name,latitude,longitude\nE1,One,51.5,-0.1\nE1,Two,53.4,-2.2\n";
        assert!(matches!(
            AreaSet::read_csv(dup.as_bytes()),
            Err(PanelError::DuplicateArea(id)) if id == "E1"
        ));
    }

    proptest! {
        #[test]
        fn symmetric_and_triangle(
            a in (-90.0f64..90.0, -180.0f64..180.0),
            b in (-90.0f64..90.0, -180.0f64..180.0),
            c in (-90.0f64..90.0, -180.0f64..180.0),
        ) {
            let ab = haversine_km(a.0, a.1, b.0, b.1);
            let ba = haversine_km(b.0, b.1, a.0, a.1);
            let bc = haversine_km(b.0, b.1, c.0, c.1);
            let ac = haversine_km(a.0, a.1, c.0, c.1);
            prop_assert!((ab - ba).abs() < 1e-6);
            prop_assert!(ac <= ab + bc + 1e-6);
            prop_assert!(ab >= 0.0);
        }
    }
}
