use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{dist, kmeans, single_linkage, ClusterError, FeatureSet, DEFAULT_RESTARTS};
use crate::ingest::StationId;

/// Thresholds of the outlier screen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutlierParams {
    /// Cluster count used by both probe clusterings.
    pub probe_k: usize,
    /// A cluster is small when its size is below `max(min_cluster_size, min_cluster_fraction * n)`.
    pub min_cluster_size: usize,
    pub min_cluster_fraction: f64,
    /// Percentile (0-100) of nearest-centroid distances a station must exceed.
    pub distance_percentile: f64,
    pub restarts: usize,
}

impl Default for OutlierParams {
    fn default() -> Self {
        Self {
            probe_k: 5,
            min_cluster_size: 2,
            min_cluster_fraction: 0.01,
            distance_percentile: 95.0,
            restarts: DEFAULT_RESTARTS,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub removed_stations: BTreeSet<StationId>,
    /// Distance of every station to the nearest centroid of a non-small K-means cluster.
    pub nearest_distance: BTreeMap<StationId, f64>,
    /// Distance cut-off (the configured percentile of `nearest_distance`).
    pub threshold: f64,
    pub small_cluster_size: f64,
    pub probe_k: usize,
}

/// Flags stations that sit in a small cluster under both K-means and
/// single-linkage clustering at `probe_k` clusters, and whose distance to the
/// nearest centroid of a non-small K-means cluster exceeds the configured
/// percentile of that distance over all stations.
///
/// With fewer than `probe_k + 2` stations nothing is flagged.
pub fn detect_outlier_stations(
    features: &FeatureSet,
    params: &OutlierParams,
    seed: u64,
) -> Result<OutlierReport, ClusterError> {
    let n = features.len();
    let small_cluster_size =
        (params.min_cluster_size as f64).max(params.min_cluster_fraction * n as f64);
    let mut report = OutlierReport {
        small_cluster_size,
        probe_k: params.probe_k,
        ..OutlierReport::default()
    };
    if params.probe_k < 1 || n < params.probe_k + 2 {
        return Ok(report);
    }
    let model = match kmeans(features, params.probe_k, seed, params.restarts) {
        Ok(m) => m,
        Err(ClusterError::TooFewDistinct { .. }) => return Ok(report),
        Err(e) => return Err(e),
    };
    let km_labels = model.labels_for(features)?;
    let km_sizes = model.sizes();
    let sl_labels = single_linkage(features, params.probe_k);
    let mut sl_sizes = vec![0usize; sl_labels.iter().max().map_or(0, |m| m + 1)];
    for &l in &sl_labels {
        sl_sizes[l] += 1;
    }
    let is_small = |size: usize| (size as f64) < small_cluster_size;

    let anchors: Vec<&Vec<f64>> = model
        .centroids
        .iter()
        .zip(&km_sizes)
        .filter(|(_, &s)| !is_small(s))
        .map(|(c, _)| c)
        .collect();
    if anchors.is_empty() {
        return Ok(report);
    }
    let distances: Vec<f64> = features
        .rows()
        .iter()
        .map(|x| {
            anchors
                .iter()
                .map(|c| dist(x, c))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    report.threshold = percentile(&distances, params.distance_percentile);
    for (i, id) in features.ids().iter().enumerate() {
        report.nearest_distance.insert(id.clone(), distances[i]);
        let small_in_both = is_small(km_sizes[km_labels[i]]) && is_small(sl_sizes[sl_labels[i]]);
        if small_in_both && distances[i] > report.threshold {
            report.removed_stations.insert(id.clone());
        }
    }
    Ok(report)
}

/// Linear interpolation between closest ranks.
fn percentile(values: &[f64], pct: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = (pct / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v: Vec<f64> = (0..=10).map(f64::from).collect();
        assert_eq!(percentile(&v, 95.0), 9.5);
        assert_eq!(percentile(&v, 100.0), 10.0);
        assert_eq!(percentile(&[3.0], 95.0), 3.0);
    }

    #[test]
    fn too_few_points_flags_nothing() {
        let f = FeatureSet::from_rows(vec![vec![0.0], vec![1.0], vec![100.0]]).unwrap();
        let r = detect_outlier_stations(
            &f,
            &OutlierParams {
                probe_k: 2,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        assert!(r.removed_stations.is_empty());
    }
}
