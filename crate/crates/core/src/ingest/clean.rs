use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::parse::{RowDiagnostic, Severity};
use super::record::{Event, EventKind, StationId, TripRecord};
use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleaningRules {
    /// Trips shorter than this are dropped.
    pub min_duration_s: u64,
    /// Round trips (same start and end station) shorter than this are dropped.
    pub same_station_min_s: u64,
}

impl Default for CleaningRules {
    fn default() -> Self {
        Self {
            min_duration_s: 60,
            same_station_min_s: 120,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalReason {
    TooShort,
    SameStationShort,
    ParseError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub trip_id: String,
    pub reason: RemovalReason,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input_count: usize,
    pub kept_count: usize,
    pub removed: Vec<Removal>,
    pub excluded_stations_pickup: BTreeSet<StationId>,
    pub excluded_stations_dropoff: BTreeSet<StationId>,
}

impl CleaningReport {
    /// Counts rejected parse rows as removed inputs, keeping
    /// `kept_count + removed.len() == input_count`.
    pub fn absorb_parse_errors(&mut self, diagnostics: &[RowDiagnostic]) {
        for d in diagnostics.iter().filter(|d| d.severity == Severity::Error) {
            self.input_count += 1;
            self.removed.push(Removal {
                trip_id: d.trip_id.clone(),
                reason: RemovalReason::ParseError,
            });
        }
    }

    pub fn count(&self, reason: RemovalReason) -> usize {
        self.removed.iter().filter(|r| r.reason == reason).count()
    }
}

pub fn removal_reason(trip: &TripRecord, rules: &CleaningRules) -> Option<RemovalReason> {
    if trip.duration < rules.min_duration_s {
        Some(RemovalReason::TooShort)
    } else if trip.start_station == trip.end_station && trip.duration < rules.same_station_min_s {
        Some(RemovalReason::SameStationShort)
    } else {
        None
    }
}

/// Drops too-short trips and short round trips; kept trips keep their order.
pub fn clean_trips(
    trips: Vec<TripRecord>,
    rules: &CleaningRules,
) -> (Vec<TripRecord>, CleaningReport) {
    let input_count = trips.len();
    let mut removed = Vec::new();
    let kept: Vec<TripRecord> = trips
        .into_iter()
        .filter(|t| match removal_reason(t, rules) {
            Some(reason) => {
                removed.push(Removal {
                    trip_id: t.trip_id.clone(),
                    reason,
                });
                false
            }
            None => true,
        })
        .collect();
    let report = CleaningReport {
        input_count,
        kept_count: kept.len(),
        removed,
        ..CleaningReport::default()
    };
    (kept, report)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LowActivityExclusions {
    pub pickup: BTreeSet<StationId>,
    pub dropoff: BTreeSet<StationId>,
}

impl LowActivityExclusions {
    pub fn for_kind(&self, kind: EventKind) -> &BTreeSet<StationId> {
        match kind {
            EventKind::Pickup => &self.pickup,
            EventKind::Dropoff => &self.dropoff,
        }
    }
}

/// Flags stations whose daily average pickups (resp. drop-offs) fall strictly
/// below `min_daily_avg`.
///
/// `stations` lists stations that should be considered even if they have no
/// events at all; every station that appears in `events` is considered too.
pub fn filter_low_activity_stations<'a>(
    events: impl IntoIterator<Item = &'a Event>,
    stations: impl IntoIterator<Item = &'a StationId>,
    days_in_quarter: i64,
    min_daily_avg: f64,
) -> Result<LowActivityExclusions, IngestError> {
    if days_in_quarter <= 0 {
        return Err(IngestError::Config(format!(
            "days_in_quarter must be positive, got {days_in_quarter}"
        )));
    }
    let mut counts: BTreeMap<&StationId, [u64; 2]> =
        stations.into_iter().map(|s| (s, [0, 0])).collect();
    for e in events {
        counts.entry(&e.station).or_default()[e.kind as usize] += 1;
    }
    let days = days_in_quarter as f64;
    let mut out = LowActivityExclusions::default();
    for (station, [pickups, dropoffs]) in counts {
        if (pickups as f64) / days < min_daily_avg {
            out.pickup.insert(station.clone());
        }
        if (dropoffs as f64) / days < min_daily_avg {
            out.dropoff.insert(station.clone());
        }
    }
    Ok(out)
}
