//! K-means with k-means++ seeding and Hartigan-Wong single-point transfers.
//!
//! Each restart alternates two phases until neither changes the partition:
//!
//! 1. Hartigan-Wong transfers. A point `x` in cluster `a` (size `n_a > 1`)
//!    moves to cluster `b` when `n_b / (n_b + 1) * |x - c_b|^2` is strictly
//!    below `n_a / (n_a - 1) * |x - c_a|^2`, which is exactly when the move
//!    lowers the total within-cluster sum of squares. Centroids are updated
//!    incrementally after every move.
//! 2. A nearest-centroid sweep (ties to the lowest cluster index) with exact
//!    centroid recomputation, so the returned assignment is consistent with
//!    the returned centroids.
//!
//! Rows are processed in an order that depends only on their values, never on
//! station ids, so relabeling stations cannot change the partition.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{centroids_of, sq_dist, ClusterError, ClusterModel, FeatureSet};

pub const DEFAULT_RESTARTS: usize = 25;

const MAX_ROUNDS: usize = 500;
const MAX_TRANSFER_PASSES: usize = 1_000;
/// Relative margin a transfer must clear, so rounding noise cannot cycle moves.
const TRANSFER_MARGIN: f64 = 1e-12;

/// A fitted model plus the WCSS recorded after every accepted change of the
/// winning restart.
#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub model: ClusterModel,
    pub wcss_trace: Vec<f64>,
    pub restart: usize,
}

/// Best of `restarts` runs by WCSS (then restart index). Deterministic in
/// `(features, k, seed, restarts)` regardless of thread count.
pub fn kmeans(
    features: &FeatureSet,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterModel, ClusterError> {
    kmeans_traced(features, k, seed, restarts).map(|fit| fit.model)
}

pub fn kmeans_traced(
    features: &FeatureSet,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<KMeansFit, ClusterError> {
    let n = features.len();
    if k == 0 || k > n {
        return Err(ClusterError::InvalidK { k, n });
    }
    let rows = features.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lex_cmp(&rows[a], &rows[b]).then(a.cmp(&b)));
    let distinct = 1 + order
        .windows(2)
        .filter(|w| lex_cmp(&rows[w[0]], &rows[w[1]]) != Ordering::Equal)
        .count();
    if distinct < k {
        return Err(ClusterError::TooFewDistinct { k, distinct });
    }
    let data: Vec<&[f64]> = order.iter().map(|&i| rows[i].as_slice()).collect();

    let runs: Vec<Run> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| run_once(&data, k, seed, r))
        .collect();
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.wcss.total_cmp(&b.wcss).then(ia.cmp(ib)))
        .expect("at least one restart");

    let mut labels = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        labels[row] = best.labels[pos];
    }
    let assignment = features.ids().iter().cloned().zip(labels).collect();
    Ok(KMeansFit {
        model: ClusterModel {
            k,
            centroids: best.centroids,
            assignment,
            wcss: best.wcss,
            seed,
            restarts: restarts.max(1),
        },
        wcss_trace: best.trace,
        restart,
    })
}

/// Index of the closest centroid; ties go to the lowest index.
pub fn nearest_centroid(x: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(x, centroid);
        if d < best.0 {
            best = (d, c);
        }
    }
    best.1
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

struct Run {
    labels: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    wcss: f64,
    trace: Vec<f64>,
}

fn run_once(data: &[&[f64]], k: usize, seed: u64, restart: usize) -> Run {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    let centers = seed_plus_plus(data, k, &mut rng);
    let mut labels: Vec<usize> = data.iter().map(|x| nearest_centroid(x, &centers)).collect();
    repair_empty(data, &mut labels, k);

    let mut trace = Vec::new();
    let mut centroids = means(data, &labels, k);
    for _ in 0..MAX_ROUNDS {
        trace.push(wcss(data, &labels, &centroids));
        transfer_until_stable(data, &mut labels, &mut centroids, &mut trace);
        relabel_canonical(&mut labels, k);
        centroids = means(data, &labels, k);

        let mut changed = false;
        for (x, l) in data.iter().zip(labels.iter_mut()) {
            let nearest = nearest_centroid(x, &centroids);
            if nearest != *l {
                *l = nearest;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        repair_empty(data, &mut labels, k);
        centroids = means(data, &labels, k);
    }
    let wcss = wcss(data, &labels, &centroids);
    trace.push(wcss);
    Run {
        labels,
        centroids,
        wcss,
        trace,
    }
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance from the nearest chosen center.
fn seed_plus_plus(data: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = data.len();
    let first = rng.random_range(0..n);
    let mut centers = vec![data[first].to_vec()];
    let mut d2: Vec<f64> = data.iter().map(|x| sq_dist(x, data[first])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = None;
        for (i, &d) in d2.iter().enumerate() {
            if d <= 0.0 {
                continue;
            }
            acc += d;
            pick = Some(i);
            if acc > target {
                break;
            }
        }
        // Distinct count >= k guarantees some point is still uncovered.
        let pick = pick.expect("a point away from every chosen center");
        for (dd, x) in d2.iter_mut().zip(data) {
            *dd = dd.min(sq_dist(x, data[pick]));
        }
        centers.push(data[pick].to_vec());
    }
    centers
}

fn means(data: &[&[f64]], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    centroids_of(data, labels, k).expect("no empty clusters after repair")
}

fn wcss(data: &[&[f64]], labels: &[usize], centroids: &[Vec<f64>]) -> f64 {
    data.iter()
        .zip(labels)
        .map(|(x, &l)| sq_dist(x, &centroids[l]))
        .sum()
}

/// Gives each empty cluster the point farthest from its own centroid, taken
/// from a cluster with more than one member.
fn repair_empty(data: &[&[f64]], labels: &mut [usize], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let dim = data[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        for (x, &l) in data.iter().zip(labels.iter()) {
            for (s, v) in sums[l].iter_mut().zip(x.iter()) {
                *s += v;
            }
        }
        let mut far = (f64::NEG_INFINITY, usize::MAX);
        for (i, (x, &l)) in data.iter().zip(labels.iter()).enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let c: Vec<f64> = sums[l].iter().map(|s| s / sizes[l] as f64).collect();
            let d = sq_dist(x, &c);
            if d > far.0 {
                far = (d, i);
            }
        }
        labels[far.1] = empty;
    }
}

fn transfer_until_stable(
    data: &[&[f64]],
    labels: &mut [usize],
    centroids: &mut [Vec<f64>],
    trace: &mut Vec<f64>,
) {
    let k = centroids.len();
    let mut sizes = vec![0usize; k];
    for &l in labels.iter() {
        sizes[l] += 1;
    }
    let mut current = *trace.last().expect("trace seeded with initial WCSS");
    for _ in 0..MAX_TRANSFER_PASSES {
        let mut moved = false;
        for (x, label) in data.iter().zip(labels.iter_mut()) {
            let from = *label;
            let n_from = sizes[from];
            if n_from < 2 {
                continue;
            }
            let removal = n_from as f64 / (n_from - 1) as f64 * sq_dist(x, &centroids[from]);
            let mut best = (f64::INFINITY, from);
            for (to, c) in centroids.iter().enumerate() {
                if to == from {
                    continue;
                }
                let n_to = sizes[to] as f64;
                let addition = n_to / (n_to + 1.0) * sq_dist(x, c);
                if addition < best.0 {
                    best = (addition, to);
                }
            }
            let (addition, to) = best;
            if addition < removal * (1.0 - TRANSFER_MARGIN) {
                let (nf, nt) = (n_from as f64, sizes[to] as f64);
                for (c, v) in centroids[from].iter_mut().zip(x.iter()) {
                    *c = (nf * *c - v) / (nf - 1.0);
                }
                for (c, v) in centroids[to].iter_mut().zip(x.iter()) {
                    *c = (nt * *c + v) / (nt + 1.0);
                }
                sizes[from] -= 1;
                sizes[to] += 1;
                *label = to;
                current -= removal - addition;
                trace.push(current);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

/// Renumbers clusters by decreasing size, ties by first member position.
fn relabel_canonical(labels: &mut [usize], k: usize) {
    let mut sizes = vec![0usize; k];
    let mut first = vec![usize::MAX; k];
    for (i, &l) in labels.iter().enumerate() {
        sizes[l] += 1;
        first[l] = first[l].min(i);
    }
    let mut old: Vec<usize> = (0..k).collect();
    old.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(first[a].cmp(&first[b])));
    let mut new_of = vec![0; k];
    for (new, &o) in old.iter().enumerate() {
        new_of[o] = new;
    }
    for l in labels.iter_mut() {
        *l = new_of[*l];
    }
}
