use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{round6, SCHEMA_VERSION};
use crate::balance::{BalanceIndex, CategoryMode};
use crate::calendar::Quarter;
use crate::ingest::{StationId, TripRecord};

/// Headline counts of one quarter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterSummary {
    pub schema_version: u32,
    pub quarter: Quarter,
    pub trip_count_raw: usize,
    pub trip_count_clean: usize,
    /// Distinct stations appearing at either end of a raw trip.
    pub station_count: usize,
    /// Mean clean-trip duration in whole minutes; `None` without clean trips.
    pub mean_duration_minutes: Option<i64>,
    pub mean_duration_minutes_exact: Option<f64>,
}

/// `raw` and `clean` are the quarter's trips before and after cleaning.
pub fn quarter_summary(
    quarter: Quarter,
    raw: &[TripRecord],
    clean: &[TripRecord],
) -> QuarterSummary {
    let stations: BTreeSet<&StationId> = raw
        .iter()
        .flat_map(|t| [&t.start_station, &t.end_station])
        .collect();
    let exact = (!clean.is_empty()).then(|| {
        let seconds: u128 = clean.iter().map(|t| t.duration as u128).sum();
        seconds as f64 / 60.0 / clean.len() as f64
    });
    QuarterSummary {
        schema_version: SCHEMA_VERSION,
        quarter,
        trip_count_raw: raw.len(),
        trip_count_clean: clean.len(),
        station_count: stations.len(),
        mean_duration_minutes: exact.map(|m| m.round() as i64),
        mean_duration_minutes_exact: exact.map(round6),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSummary {
    pub window: String,
    pub station_count: usize,
    pub self_balanced_count: usize,
    pub self_balanced_fraction: f64,
    pub mean_adms: f64,
    pub mean_adme: f64,
    /// Stations per category (index 0 is category 1), keyed by mode.
    pub category_counts: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceSummary {
    pub schema_version: u32,
    pub quarter: Quarter,
    pub windows: Vec<WindowSummary>,
}

/// Per-window aggregates, windows in order of first appearance.
pub fn balance_summary(
    quarter: Quarter,
    indices: &[BalanceIndex],
    categories: u8,
) -> BalanceSummary {
    let mut order: Vec<&str> = Vec::new();
    let mut groups: BTreeMap<&str, Vec<&BalanceIndex>> = BTreeMap::new();
    for i in indices {
        if !groups.contains_key(i.window.as_str()) {
            order.push(&i.window);
        }
        groups.entry(&i.window).or_default().push(i);
    }
    let windows = order
        .into_iter()
        .map(|w| {
            let g = &groups[w];
            let n = g.len();
            let balanced = g.iter().filter(|i| i.self_balanced).count();
            let category_counts = CategoryMode::ALL
                .iter()
                .map(|&mode| {
                    let mut counts = vec![0usize; categories as usize];
                    for i in g {
                        let c = (mode.category(i).max(1) as usize - 1).min(counts.len() - 1);
                        counts[c] += 1;
                    }
                    (mode.as_str().to_owned(), counts)
                })
                .collect();
            WindowSummary {
                window: w.to_owned(),
                station_count: n,
                self_balanced_count: balanced,
                self_balanced_fraction: round6(balanced as f64 / n as f64),
                mean_adms: round6(g.iter().map(|i| i.adms).sum::<f64>() / n as f64),
                mean_adme: round6(g.iter().map(|i| i.adme).sum::<f64>() / n as f64),
                category_counts,
            }
        })
        .collect();
    BalanceSummary {
        schema_version: SCHEMA_VERSION,
        quarter,
        windows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::balance::CategoryScheme;
    use crate::ingest::MemberType;
    use chrono::NaiveDate;

    fn trip(from: &str, to: &str, duration: u64) -> TripRecord {
        let start = NaiveDate::from_ymd_opt(2015, 7, 1)
            .unwrap()
            .and_hms_opt(8, 0, 0)
            .unwrap();
        TripRecord {
            trip_id: format!("{from}-{to}-{duration}"),
            start_time: start,
            end_time: start + chrono::Duration::seconds(duration as i64),
            duration,
            start_station: from.into(),
            end_station: to.into(),
            bike_id: "W1".into(),
            member_type: MemberType::Member,
        }
    }

    #[test]
    fn empty_quarter_is_null_mean() {
        let q = Quarter::new(2015, 3).unwrap();
        let s = quarter_summary(q, &[], &[]);
        assert_eq!(
            (s.trip_count_raw, s.trip_count_clean, s.station_count),
            (0, 0, 0)
        );
        assert_eq!(s.mean_duration_minutes, None);
        let json = serde_json::to_value(&s).unwrap();
        assert!(json["mean_duration_minutes"].is_null());
        assert_eq!(json["schema_version"], 1);
    }

    #[test]
    fn counts_and_mean() {
        let q = Quarter::new(2015, 3).unwrap();
        let raw = vec![
            trip("A", "B", 600),
            trip("B", "C", 1500),
            trip("A", "A", 30),
        ];
        let clean = raw[..2].to_vec();
        let s = quarter_summary(q, &raw, &clean);
        assert_eq!(
            (s.trip_count_raw, s.trip_count_clean, s.station_count),
            (3, 2, 3)
        );
        assert_eq!(s.mean_duration_minutes_exact, Some(17.5));
        assert_eq!(s.mean_duration_minutes, Some(18));
    }

    #[test]
    fn window_fractions() {
        let scheme = CategoryScheme::default();
        let idx = vec![
            BalanceIndex::new("A".into(), "full_day", 3.0, 4.0, &scheme),
            BalanceIndex::new("B".into(), "full_day", 22.0, 1.0, &scheme),
            BalanceIndex::new("A".into(), "morning", 1.0, 1.0, &scheme),
        ];
        let s = balance_summary(Quarter::new(2015, 3).unwrap(), &idx, 8);
        assert_eq!(s.windows.len(), 2);
        assert_eq!(s.windows[0].window, "full_day");
        assert_eq!(s.windows[0].self_balanced_fraction, 0.5);
        assert_eq!(
            s.windows[0].category_counts["adms_only"],
            vec![1, 0, 0, 0, 1, 0, 0, 0]
        );
        assert_eq!(s.windows[1].self_balanced_fraction, 1.0);
    }
}
