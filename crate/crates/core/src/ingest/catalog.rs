use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::record::{StationId, StationInfo};
use super::IngestError;

/// Station locations keyed by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StationCatalog {
    stations: BTreeMap<StationId, StationInfo>,
}

impl StationCatalog {
    /// Validates coordinate ranges and id uniqueness.
    pub fn from_stations(
        stations: impl IntoIterator<Item = StationInfo>,
    ) -> Result<Self, IngestError> {
        let mut map = BTreeMap::new();
        for s in stations {
            if !(-90.0..=90.0).contains(&s.latitude) || !(-180.0..=180.0).contains(&s.longitude) {
                return Err(IngestError::Catalog(format!(
                    "station {} has out-of-range coordinates ({}, {})",
                    s.id, s.latitude, s.longitude
                )));
            }
            if map.contains_key(&s.id) {
                return Err(IngestError::Catalog(format!(
                    "duplicate station id {}",
                    s.id
                )));
            }
            map.insert(s.id.clone(), s);
        }
        Ok(Self { stations: map })
    }

    pub fn get(&self, id: &StationId) -> Option<&StationInfo> {
        self.stations.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &StationId> {
        self.stations.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = &StationInfo> {
        self.stations.values()
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    /// Picks the reader by file extension: `.geojson`/`.json` or CSV otherwise.
    pub fn load(path: &Path) -> Result<Self, IngestError> {
        let file = std::fs::File::open(path).map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext)
                if ext.eq_ignore_ascii_case("geojson") || ext.eq_ignore_ascii_case("json") =>
            {
                Self::read_geojson(file)
            }
            _ => Self::read_csv(file),
        }
    }

    /// CSV with columns `id,name,lat,lon` (`latitude`/`longitude` also accepted).
    pub fn read_csv<R: Read>(source: R) -> Result<Self, IngestError> {
        #[derive(Deserialize)]
        struct Row {
            id: String,
            #[serde(default)]
            name: String,
            #[serde(alias = "latitude")]
            lat: f64,
            #[serde(alias = "longitude")]
            lon: f64,
        }
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(source);
        let mut stations = Vec::new();
        for row in reader.deserialize::<Row>() {
            let row = row?;
            stations.push(StationInfo {
                id: StationId::new(row.id),
                name: row.name,
                latitude: row.lat,
                longitude: row.lon,
            });
        }
        Self::from_stations(stations)
    }

    /// Point-feature GeoJSON. The id is taken from the first present property
    /// among `id`, `station_id`, `TERMINAL_NUMBER`, `terminal_number`, or the
    /// feature's own `id`.
    pub fn read_geojson<R: Read>(source: R) -> Result<Self, IngestError> {
        const ID_KEYS: [&str; 4] = ["id", "station_id", "TERMINAL_NUMBER", "terminal_number"];
        const NAME_KEYS: [&str; 4] = ["name", "NAME", "ADDRESS", "address"];
        let doc: Value = serde_json::from_reader(source)?;
        let features = doc
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| IngestError::Catalog("GeoJSON has no `features` array".into()))?;
        let scalar = |v: &Value| match v {
            Value::String(s) => Some(s.clone()),
            Value::Number(n) => Some(n.to_string()),
            _ => None,
        };
        let mut stations = Vec::with_capacity(features.len());
        for (i, f) in features.iter().enumerate() {
            let props = f.get("properties").cloned().unwrap_or(Value::Null);
            let id = ID_KEYS
                .iter()
                .find_map(|k| props.get(*k).and_then(scalar))
                .or_else(|| f.get("id").and_then(scalar))
                .ok_or_else(|| IngestError::Catalog(format!("feature {i} has no station id")))?;
            let name = NAME_KEYS
                .iter()
                .find_map(|k| props.get(*k).and_then(Value::as_str))
                .unwrap_or_default()
                .to_owned();
            let geometry = f.get("geometry");
            if geometry.and_then(|g| g.get("type")).and_then(Value::as_str) != Some("Point") {
                return Err(IngestError::Catalog(format!("feature {i} is not a Point")));
            }
            let coords = geometry
                .and_then(|g| g.get("coordinates"))
                .and_then(Value::as_array)
                .filter(|c| c.len() >= 2)
                .ok_or_else(|| IngestError::Catalog(format!("feature {i} has no coordinates")))?;
            let (lon, lat) = match (coords[0].as_f64(), coords[1].as_f64()) {
                (Some(lon), Some(lat)) => (lon, lat),
                _ => {
                    return Err(IngestError::Catalog(format!(
                        "feature {i} has non-numeric coordinates"
                    )))
                }
            };
            stations.push(StationInfo {
                id: StationId::new(id),
                name,
                latitude: lat,
                longitude: lon,
            });
        }
        Self::from_stations(stations)
    }
}
