//! Internal validity indices over Euclidean distance.
//!
//! * Davies-Bouldin: `(1/k) Σ_i max_{j≠i} (σ_i + σ_j) / d(c_i, c_j)`, where
//!   `σ_i` is the mean distance of cluster `i`'s members to its centroid.
//!   Lower is better.
//! * Silhouette: mean of `(b - a) / max(a, b)`; `a` is the mean distance to
//!   the other members of the point's cluster (0 for a singleton), `b` the
//!   smallest mean distance to another cluster. `a = b = 0` scores 0.
//! * Dunn: smallest distance between points of different clusters over the
//!   largest within-cluster diameter.

use serde::{Deserialize, Serialize};

use super::{centroids_of, cluster_count, dist, ClusterError, ClusterModel, FeatureSet};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityScores {
    pub k: usize,
    pub davies_bouldin: f64,
    pub silhouette: f64,
    pub dunn: f64,
}

fn require_two(k: usize, index: &'static str) -> Result<(), ClusterError> {
    if k < 2 {
        Err(ClusterError::SingleCluster { index })
    } else {
        Ok(())
    }
}

/// Symmetric pairwise distance matrix, row-major.
struct Distances {
    n: usize,
    d: Vec<f64>,
}

impl Distances {
    fn new<R: AsRef<[f64]>>(points: &[R]) -> Self {
        let n = points.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = dist(points[i].as_ref(), points[j].as_ref());
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        Self { n, d }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }
}

pub fn silhouette_labels<R: AsRef<[f64]>>(
    points: &[R],
    labels: &[usize],
) -> Result<f64, ClusterError> {
    let k = cluster_count(labels)?;
    require_two(k, "silhouette")?;
    let dm = Distances::new(points);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let mut total = 0.0;
    let mut per_cluster = vec![0.0; k];
    for (i, &own) in labels.iter().enumerate() {
        per_cluster.iter_mut().for_each(|s| *s = 0.0);
        for (&d, &l) in dm.row(i).iter().zip(labels) {
            per_cluster[l] += d;
        }
        let a = if sizes[own] > 1 {
            per_cluster[own] / (sizes[own] - 1) as f64
        } else {
            0.0
        };
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| per_cluster[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / labels.len() as f64)
}

pub fn davies_bouldin_labels<R: AsRef<[f64]>>(
    points: &[R],
    labels: &[usize],
) -> Result<f64, ClusterError> {
    let k = cluster_count(labels)?;
    require_two(k, "Davies-Bouldin")?;
    let centroids = centroids_of(points, labels, k)?;
    let mut spread = vec![0.0; k];
    let mut sizes = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        spread[l] += dist(p.as_ref(), &centroids[l]);
        sizes[l] += 1;
    }
    for (s, &n) in spread.iter_mut().zip(&sizes) {
        *s /= n as f64;
    }
    let mut sum = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in (0..k).filter(|&j| j != i) {
            let sep = dist(&centroids[i], &centroids[j]);
            if sep == 0.0 {
                return Err(ClusterError::CoincidentCentroids(i.min(j), i.max(j)));
            }
            worst = worst.max((spread[i] + spread[j]) / sep);
        }
        sum += worst;
    }
    Ok(sum / k as f64)
}

pub fn dunn_labels<R: AsRef<[f64]>>(points: &[R], labels: &[usize]) -> Result<f64, ClusterError> {
    let k = cluster_count(labels)?;
    require_two(k, "Dunn")?;
    let dm = Distances::new(points);
    let mut min_between = f64::INFINITY;
    let mut max_diameter = 0.0f64;
    for i in 0..dm.n {
        for j in (i + 1)..dm.n {
            let d = dm.d[i * dm.n + j];
            if labels[i] == labels[j] {
                max_diameter = max_diameter.max(d);
            } else {
                min_between = min_between.min(d);
            }
        }
    }
    if max_diameter == 0.0 {
        return Err(ClusterError::ZeroDiameter);
    }
    Ok(min_between / max_diameter)
}

pub fn silhouette(features: &FeatureSet, model: &ClusterModel) -> Result<f64, ClusterError> {
    silhouette_labels(features.rows(), &model.labels_for(features)?)
}

pub fn davies_bouldin(features: &FeatureSet, model: &ClusterModel) -> Result<f64, ClusterError> {
    davies_bouldin_labels(features.rows(), &model.labels_for(features)?)
}

pub fn dunn(features: &FeatureSet, model: &ClusterModel) -> Result<f64, ClusterError> {
    dunn_labels(features.rows(), &model.labels_for(features)?)
}

/// All three indices; the first failing index aborts.
pub fn validity_scores(
    features: &FeatureSet,
    model: &ClusterModel,
) -> Result<ValidityScores, ClusterError> {
    let labels = model.labels_for(features)?;
    let rows = features.rows();
    Ok(ValidityScores {
        k: model.k,
        davies_bouldin: davies_bouldin_labels(rows, &labels)?,
        silhouette: silhouette_labels(rows, &labels)?,
        dunn: dunn_labels(rows, &labels)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn silhouette_identical_pairs_is_one() {
        let p = pts(&[0.0, 0.0, 3.0, 3.0]);
        assert_eq!(silhouette_labels(&p, &[0, 0, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn silhouette_pairs_hand_value() {
        // Outer points (0, 11): a = 1, b = 10.5. Inner points (1, 10): a = 1, b = 9.5.
        let p = pts(&[0.0, 1.0, 10.0, 11.0]);
        let s = silhouette_labels(&p, &[0, 0, 1, 1]).unwrap();
        let expected = (9.5 / 10.5 + 8.5 / 9.5) / 2.0;
        assert!((s - expected).abs() < 1e-12);
        assert!((s - 0.899749).abs() < 1e-6);
    }

    #[test]
    fn silhouette_all_identical_is_zero() {
        let p = pts(&[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(silhouette_labels(&p, &[0, 0, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn silhouette_single_cluster_undefined() {
        let p = pts(&[0.0, 1.0]);
        assert_eq!(
            silhouette_labels(&p, &[0, 0]),
            Err(ClusterError::SingleCluster {
                index: "silhouette"
            })
        );
    }

    #[test]
    fn davies_bouldin_cases() {
        assert_eq!(
            davies_bouldin_labels(&pts(&[0.0, 5.0]), &[0, 1]).unwrap(),
            0.0
        );
        let db = davies_bouldin_labels(&pts(&[0.0, 2.0, 10.0, 12.0]), &[0, 0, 1, 1]).unwrap();
        assert!((db - 0.2).abs() < 1e-12);
        let doubled = davies_bouldin_labels(
            &pts(&[0.0, 0.0, 2.0, 2.0, 10.0, 10.0, 12.0, 12.0]),
            &[0, 0, 0, 0, 1, 1, 1, 1],
        )
        .unwrap();
        assert!((doubled - db).abs() < 1e-12);
    }

    #[test]
    fn davies_bouldin_coincident_centroids() {
        // Both clusters centered at 1.
        let err = davies_bouldin_labels(&pts(&[0.0, 2.0, 1.0]), &[0, 0, 1]).unwrap_err();
        assert_eq!(err, ClusterError::CoincidentCentroids(0, 1));
    }

    #[test]
    fn dunn_cases() {
        let d = dunn_labels(&pts(&[0.0, 1.0, 10.0, 11.0]), &[0, 0, 1, 1]).unwrap();
        assert_eq!(d, 9.0);
        let tighter = dunn_labels(&pts(&[0.25, 0.75, 10.25, 10.75]), &[0, 0, 1, 1]).unwrap();
        assert!(tighter > d);
        let farther = dunn_labels(&pts(&[0.0, 1.0, 20.0, 21.0]), &[0, 0, 1, 1]).unwrap();
        assert!(farther > d);
        assert_eq!(
            dunn_labels(&pts(&[0.0, 1.0]), &[0, 1]),
            Err(ClusterError::ZeroDiameter)
        );
    }

    #[test]
    fn empty_label_rejected() {
        assert_eq!(
            dunn_labels(&pts(&[0.0, 1.0]), &[0, 2]),
            Err(ClusterError::EmptyCluster(1))
        );
    }
}
