use serde_json::{json, Map, Value};

use super::palette::{category_color, cluster_color, PaletteColor, SELF_BALANCED_COLOR};
use super::{round6, ReportError};
use crate::balance::{BalanceIndex, CategoryMode};
use crate::cluster::ClusterModel;
use crate::ingest::{StationCatalog, StationId, StationInfo};

/// A FeatureCollection plus the stations left out for lack of coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct StyledCollection {
    pub collection: Value,
    pub skipped: Vec<StationId>,
}

impl StyledCollection {
    pub fn features(&self) -> &[Value] {
        self.collection["features"]
            .as_array()
            .map_or(&[], Vec::as_slice)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.collection).expect("JSON values always serialize")
    }
}

fn point(station: &StationInfo, mut properties: Map<String, Value>, color: PaletteColor) -> Value {
    properties.insert("station_id".into(), json!(station.id));
    properties.insert("name".into(), json!(station.name));
    properties.insert("color".into(), json!(color.name));
    properties.insert("color_hex".into(), json!(color.hex));
    // simplestyle key understood by common map viewers
    properties.insert("marker-color".into(), json!(color.hex));
    json!({
        "type": "Feature",
        "id": station.id,
        "geometry": {
            "type": "Point",
            "coordinates": [round6(station.longitude), round6(station.latitude)],
        },
        "properties": properties,
    })
}

fn collection(features: Vec<Value>) -> Value {
    json!({ "type": "FeatureCollection", "features": features })
}

/// One point per assigned station, ordered by station id, colored by cluster.
pub fn export_cluster_geojson(
    stations: &StationCatalog,
    model: &ClusterModel,
) -> Result<StyledCollection, ReportError> {
    if model.assignment.is_empty() {
        return Err(ReportError::EmptyModel);
    }
    let mut features = Vec::with_capacity(model.assignment.len());
    let mut skipped = Vec::new();
    for (id, &cluster) in &model.assignment {
        let Some(info) = stations.get(id) else {
            skipped.push(id.clone());
            continue;
        };
        let mut props = Map::new();
        props.insert("cluster".into(), json!(cluster));
        props.insert("cluster_number".into(), json!(cluster + 1));
        features.push(point(info, props, cluster_color(cluster)));
    }
    Ok(StyledCollection {
        collection: collection(features),
        skipped,
    })
}

/// One point per station of a single window, colored by the category `mode`
/// selects. In combined mode self-balanced stations are cyan.
pub fn export_balance_geojson(
    stations: &StationCatalog,
    indices: &[BalanceIndex],
    mode: CategoryMode,
) -> Result<StyledCollection, ReportError> {
    let first = indices.first().ok_or(ReportError::EmptyIndices)?;
    if let Some(other) = indices.iter().find(|i| i.window != first.window) {
        return Err(ReportError::MixedWindows(format!(
            "{}, {}",
            first.window, other.window
        )));
    }
    let mut sorted: Vec<&BalanceIndex> = indices.iter().collect();
    sorted.sort_by(|a, b| a.station.cmp(&b.station));
    let mut features = Vec::with_capacity(sorted.len());
    let mut skipped = Vec::new();
    for idx in sorted {
        let Some(info) = stations.get(&idx.station) else {
            skipped.push(idx.station.clone());
            continue;
        };
        let category = mode.category(idx);
        let color = if mode == CategoryMode::Combined && idx.self_balanced {
            SELF_BALANCED_COLOR
        } else {
            category_color(category)
        };
        let mut props = Map::new();
        props.insert("window".into(), json!(idx.window));
        props.insert("mode".into(), json!(mode.as_str()));
        props.insert("category".into(), json!(category));
        props.insert("adms".into(), json!(round6(idx.adms)));
        props.insert("adme".into(), json!(round6(idx.adme)));
        props.insert("capacity_proxy".into(), json!(round6(idx.capacity_proxy())));
        props.insert("self_balanced".into(), json!(idx.self_balanced));
        features.push(point(info, props, color));
    }
    Ok(StyledCollection {
        collection: collection(features),
        skipped,
    })
}
