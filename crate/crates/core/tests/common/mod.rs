//! Reference implementations and shared checks for the integration suites.
//!
//! The oracles are deliberately naive: they recompute everything from the
//! definitions with plain loops and share no code with the library.

#![allow(dead_code)]

use bikeshare_core::balance::{day_extremes, BalanceWindow};
use bikeshare_core::cluster::{kmeans_traced, nearest_centroid, FeatureSet};
use bikeshare_core::ingest::{Event, EventKind, StationId};
use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

fn label_count(labels: &[usize]) -> usize {
    labels.iter().max().unwrap() + 1
}

pub fn naive_silhouette(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let k = label_count(labels);
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for j in 0..n {
            if j == i {
                continue;
            }
            sums[labels[j]] += euclid(&points[i], &points[j]);
            counts[labels[j]] += 1;
        }
        let own = labels[i];
        let a = if counts[own] == 0 {
            0.0
        } else {
            sums[own] / counts[own] as f64
        };
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c != own && counts[c] > 0 {
                b = b.min(sums[c] / counts[c] as f64);
            }
        }
        let m = a.max(b);
        if m > 0.0 {
            total += (b - a) / m;
        }
    }
    total / n as f64
}

fn naive_centroids(points: &[Vec<f64>], labels: &[usize]) -> Vec<Vec<f64>> {
    let k = label_count(labels);
    let d = points[0].len();
    let mut c = vec![vec![0.0; d]; k];
    let mut n = vec![0.0; k];
    for (p, &l) in points.iter().zip(labels) {
        for (acc, x) in c[l].iter_mut().zip(p) {
            *acc += x;
        }
        n[l] += 1.0;
    }
    for (row, count) in c.iter_mut().zip(&n) {
        for v in row.iter_mut() {
            *v /= count;
        }
    }
    c
}

pub fn naive_davies_bouldin(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let k = label_count(labels);
    let c = naive_centroids(points, labels);
    let mut s = vec![0.0; k];
    let mut n = vec![0.0; k];
    for (p, &l) in points.iter().zip(labels) {
        s[l] += euclid(p, &c[l]);
        n[l] += 1.0;
    }
    let mut sum = 0.0;
    for i in 0..k {
        let mut worst: f64 = 0.0;
        for j in 0..k {
            if i != j {
                worst = worst.max((s[i] / n[i] + s[j] / n[j]) / euclid(&c[i], &c[j]));
            }
        }
        sum += worst;
    }
    sum / k as f64
}

pub fn naive_dunn(points: &[Vec<f64>], labels: &[usize]) -> f64 {
    let mut between = f64::INFINITY;
    let mut diameter: f64 = 0.0;
    for i in 0..points.len() {
        for j in 0..points.len() {
            if i == j {
                continue;
            }
            let d = euclid(&points[i], &points[j]);
            if labels[i] == labels[j] {
                diameter = diameter.max(d);
            } else {
                between = between.min(d);
            }
        }
    }
    between / diameter
}

/// A labelled point cloud: `k` offset Gaussian-ish blobs in `dim` dimensions,
/// every label used and at least one label with two members.
pub fn random_instance(rng: &mut ChaCha8Rng, max_points: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = rng.random_range(4..=max_points);
    let dim = rng.random_range(1..=6);
    let k = rng.random_range(2..=(n / 2).clamp(2, 8));
    let offsets: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    let labels: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { rng.random_range(0..k) })
        .collect();
    let points = labels
        .iter()
        .map(|&l| {
            offsets[l]
                .iter()
                .map(|o| o + rng.random_range(-1.0..1.0) + rng.random_range(-1.0..1.0))
                .collect()
        })
        .collect();
    (points, labels)
}

/// Extremes from prefix sums of the +1/-1 sequence, after sorting by time with
/// pickups first at equal times and keeping only in-window events.
pub fn prefix_sum_oracle(events: &[Event], window: &BalanceWindow) -> (u32, u32) {
    let mut seq: Vec<(NaiveDateTime, u8, i64)> = events
        .iter()
        .filter(|e| e.time.time() >= window.start && e.time.time() <= window.end)
        .map(|e| match e.kind {
            EventKind::Pickup => (e.time, 0, 1),
            EventKind::Dropoff => (e.time, 1, -1),
        })
        .collect();
    seq.sort();
    let mut prefix = vec![0i64];
    for (_, _, v) in seq {
        prefix.push(prefix.last().unwrap() + v);
    }
    let hi = *prefix.iter().max().unwrap();
    let lo = *prefix.iter().min().unwrap();
    (hi as u32, (-lo) as u32)
}

pub fn day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2015, 7, 15).unwrap()
}

/// Up to `max_events` events on one station-day. Times are drawn from a small
/// set of seconds so equal timestamps are common.
pub fn random_station_day(rng: &mut ChaCha8Rng, max_events: usize) -> Vec<Event> {
    let n = rng.random_range(0..=max_events);
    let distinct = rng.random_range(1..=(n.max(1) * 2).min(86_399));
    let slots: Vec<u32> = (0..distinct).map(|_| rng.random_range(0..86_400)).collect();
    let station = StationId::from("S");
    let mut events: Vec<Event> = (0..n)
        .map(|_| {
            let s = slots[rng.random_range(0..slots.len())];
            let time = day().and_time(NaiveTime::from_num_seconds_from_midnight_opt(s, 0).unwrap());
            let kind = if rng.random_bool(0.5) {
                EventKind::Pickup
            } else {
                EventKind::Dropoff
            };
            Event::new(station.clone(), time, kind)
        })
        .collect();
    events.sort_by_key(Event::scan_key);
    events
}

pub fn extremes(events: &[Event], window: &BalanceWindow) -> (u32, u32) {
    let d = day_extremes(&StationId::from("S"), day(), window, events).unwrap();
    (d.max_shortage, d.max_excess)
}

pub fn swap_roles(events: &[Event]) -> Vec<Event> {
    let mut out: Vec<Event> = events
        .iter()
        .map(|e| Event::new(e.station.clone(), e.time, e.kind.swapped()))
        .collect();
    out.sort_by_key(Event::scan_key);
    out
}

/// WCSS never increases along the trace, and the final assignment is a fixed
/// point: each station sits in its nearest cluster and each centroid is the
/// mean of its members.
pub fn check_kmeans_fixed_point(features: &FeatureSet, k: usize, seed: u64) -> Result<(), String> {
    let fit = kmeans_traced(features, k, seed, 3).map_err(|e| e.to_string())?;
    for w in fit.wcss_trace.windows(2) {
        if w[1] > w[0] * (1.0 + 1e-12) + 1e-12 {
            return Err(format!("WCSS rose from {} to {}", w[0], w[1]));
        }
    }
    let model = &fit.model;
    let labels = model.labels_for(features).map_err(|e| e.to_string())?;
    let mut sums = vec![vec![0.0; features.dim()]; k];
    let mut counts = vec![0usize; k];
    let mut wcss = 0.0;
    for (row, &l) in features.rows().iter().zip(&labels) {
        let nearest = nearest_centroid(row, &model.centroids);
        let d_own = euclid(row, &model.centroids[l]);
        let d_near = euclid(row, &model.centroids[nearest]);
        if d_near < d_own - 1e-9 {
            return Err(format!("point in cluster {l} is nearer to {nearest}"));
        }
        for (s, x) in sums[l].iter_mut().zip(row) {
            *s += x;
        }
        counts[l] += 1;
        wcss += d_own * d_own;
    }
    for c in 0..k {
        if counts[c] == 0 {
            return Err(format!("cluster {c} is empty"));
        }
        for (s, m) in sums[c].iter().zip(&model.centroids[c]) {
            if (s / counts[c] as f64 - m).abs() > 1e-9 {
                return Err(format!("centroid {c} is not the mean of its members"));
            }
        }
    }
    if (wcss - model.wcss).abs() > 1e-9 * (1.0 + wcss) {
        return Err(format!(
            "reported WCSS {} but members give {wcss}",
            model.wcss
        ));
    }
    Ok(())
}

pub fn random_features(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> FeatureSet {
    let centers: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..dim).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    FeatureSet::from_rows(
        (0..n)
            .map(|i| {
                centers[i % 4]
                    .iter()
                    .map(|c| c + rng.random_range(-0.2..0.2))
                    .collect()
            })
            .collect(),
    )
    .unwrap()
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}
