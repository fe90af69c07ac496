//! K-means clustering of station profiles, internal validity indices,
//! K selection and outlier screening.

mod agreement;
mod kmeans;
mod linkage;
mod outlier;
mod select;
mod validity;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::StationId;

pub use agreement::adjusted_rand_index;
pub use kmeans::{kmeans, kmeans_traced, nearest_centroid, KMeansFit, DEFAULT_RESTARTS};
pub use linkage::single_linkage;
pub use outlier::{detect_outlier_stations, OutlierParams, OutlierReport};
pub use select::{select_k, KEvaluation, KSelection};
pub use validity::{
    davies_bouldin, davies_bouldin_labels, dunn, dunn_labels, silhouette, silhouette_labels,
    validity_scores, ValidityScores,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("k = {k} is invalid for {n} points")]
    InvalidK { k: usize, n: usize },
    #[error("k = {k} exceeds the {distinct} distinct feature vectors")]
    TooFewDistinct { k: usize, distinct: usize },
    #[error("duplicate feature key {0}")]
    DuplicateKey(StationId),
    #[error("feature of {0} is not finite")]
    NonFinite(StationId),
    #[error("feature of {station} has dimension {got}, expected {expected}")]
    Dimension {
        station: StationId,
        got: usize,
        expected: usize,
    },
    #[error("{index} is undefined for a single cluster")]
    SingleCluster { index: &'static str },
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("centroids of clusters {0} and {1} coincide")]
    CoincidentCentroids(usize, usize),
    #[error("every cluster has zero diameter")]
    ZeroDiameter,
    #[error("station {0} is not assigned by the model")]
    Unassigned(StationId),
    #[error("invalid k range {lo}..={hi} for {n} points")]
    InvalidRange { lo: usize, hi: usize, n: usize },
    #[error("no k in {lo}..={hi} produced valid indices")]
    NoValidK { lo: usize, hi: usize },
}

/// Station feature vectors, ordered by station id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    ids: Vec<StationId>,
    rows: Vec<Vec<f64>>,
}

impl FeatureSet {
    /// Rejects duplicate ids, non-finite values and ragged dimensions.
    pub fn new(
        items: impl IntoIterator<Item = (StationId, Vec<f64>)>,
    ) -> Result<Self, ClusterError> {
        let mut items: Vec<(StationId, Vec<f64>)> = items.into_iter().collect();
        items.sort_by(|a, b| a.0.cmp(&b.0));
        if let Some(w) = items.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(ClusterError::DuplicateKey(w[0].0.clone()));
        }
        let dim = items.first().map_or(0, |(_, v)| v.len());
        for (id, v) in &items {
            if v.len() != dim {
                return Err(ClusterError::Dimension {
                    station: id.clone(),
                    got: v.len(),
                    expected: dim,
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(ClusterError::NonFinite(id.clone()));
            }
        }
        let (ids, rows) = items.into_iter().unzip();
        Ok(Self { ids, rows })
    }

    /// Unnamed points, keyed by zero-padded row number.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ClusterError> {
        let width = rows.len().to_string().len();
        Self::new(
            rows.into_iter()
                .enumerate()
                .map(|(i, r)| (StationId::new(format!("{i:0width$}")), r)),
        )
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn ids(&self) -> &[StationId] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StationId, &[f64])> {
        self.ids.iter().zip(self.rows.iter().map(Vec::as_slice))
    }

    /// Copy without the given stations.
    pub fn without(&self, drop: &BTreeSet<StationId>) -> Self {
        let (ids, rows) = self
            .ids
            .iter()
            .zip(&self.rows)
            .filter(|(id, _)| !drop.contains(*id))
            .map(|(id, r)| (id.clone(), r.clone()))
            .unzip();
        Self { ids, rows }
    }

    /// Every value multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            ids: self.ids.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|x| x * c).collect())
                .collect(),
        }
    }
}

/// A fitted K-means partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignment: BTreeMap<StationId, usize>,
    /// Within-cluster sum of squared Euclidean distances.
    pub wcss: f64,
    pub seed: u64,
    pub restarts: usize,
}

impl ClusterModel {
    /// Cluster labels aligned with `features` row order.
    pub fn labels_for(&self, features: &FeatureSet) -> Result<Vec<usize>, ClusterError> {
        features
            .ids()
            .iter()
            .map(|id| {
                self.assignment
                    .get(id)
                    .copied()
                    .ok_or_else(|| ClusterError::Unassigned(id.clone()))
            })
            .collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in self.assignment.values() {
            sizes[c] += 1;
        }
        sizes
    }

    /// Members of each cluster, sorted by station id.
    pub fn members(&self) -> Vec<Vec<StationId>> {
        let mut out = vec![Vec::new(); self.k];
        for (id, &c) in &self.assignment {
            out[c].push(id.clone());
        }
        out
    }
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Componentwise means of each label's members. Empty clusters are errors.
pub(crate) fn centroids_of<R: AsRef<[f64]>>(
    rows: &[R],
    labels: &[usize],
    k: usize,
) -> Result<Vec<Vec<f64>>, ClusterError> {
    let dim = rows.first().map_or(0, |r| r.as_ref().len());
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (row, &l) in rows.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(row.as_ref()) {
            *s += x;
        }
    }
    for (c, (sum, &n)) in sums.iter_mut().zip(&counts).enumerate() {
        if n == 0 {
            return Err(ClusterError::EmptyCluster(c));
        }
        for s in sum.iter_mut() {
            *s /= n as f64;
        }
    }
    Ok(sums)
}

/// Number of clusters implied by a label vector, checking none is empty.
pub(crate) fn cluster_count(labels: &[usize]) -> Result<usize, ClusterError> {
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    match seen.iter().position(|s| !s) {
        Some(empty) => Err(ClusterError::EmptyCluster(empty)),
        None => Ok(k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feature_set_validation() {
        let dup = FeatureSet::new([("a".into(), vec![1.0]), ("a".into(), vec![2.0])]);
        assert_eq!(dup.unwrap_err(), ClusterError::DuplicateKey("a".into()));
        let nan = FeatureSet::new([("a".into(), vec![f64::NAN])]);
        assert!(matches!(nan, Err(ClusterError::NonFinite(_))));
        let ragged = FeatureSet::new([("a".into(), vec![1.0]), ("b".into(), vec![1.0, 2.0])]);
        assert!(matches!(ragged, Err(ClusterError::Dimension { .. })));
    }

    #[test]
    fn feature_set_sorted_by_id() {
        let fs = FeatureSet::new([("b".into(), vec![2.0]), ("a".into(), vec![1.0])]).unwrap();
        assert_eq!(fs.ids()[0].as_str(), "a");
        assert_eq!(fs.rows()[0], vec![1.0]);
        let rows = FeatureSet::from_rows((0..12).map(|i| vec![i as f64]).collect()).unwrap();
        assert_eq!(rows.rows()[10], vec![10.0], "zero padding keeps row order");
    }

    #[test]
    fn empty_cluster_detected() {
        assert_eq!(
            cluster_count(&[0, 2, 2]),
            Err(ClusterError::EmptyCluster(1))
        );
        assert_eq!(cluster_count(&[1, 0]), Ok(2));
    }
}
