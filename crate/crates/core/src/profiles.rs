//! Hourly binning, per-day normalization and weekday/weekend station profiles.
//!
//! Bin `b` (1..=24) holds events whose time of day lies in `(b-1, b]` hours.
//! An event at exactly midnight closes the previous day and lands in that
//! day's bin 24.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calendar::DateSpan;
use crate::ingest::{DayType, Event, EventKind, QuarterEvents, StationId};

pub const HOURS: usize = 24;
pub const FEATURE_DIM: usize = 2 * HOURS;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("normalization is not defined for a day without events ({station} {date} {kind})")]
    NotDefinedForEmptyDay {
        station: StationId,
        date: NaiveDate,
        kind: EventKind,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed profile table: {0}")]
    Table(String),
}

/// The date and 1-based hour bin an event time falls into.
pub fn bin_of(time: NaiveDateTime) -> (NaiveDate, usize) {
    let secs = time.num_seconds_from_midnight();
    if secs == 0 {
        let prev = time.date().pred_opt().expect("date after NaiveDate::MIN");
        (prev, HOURS)
    } else {
        (time.date(), secs.div_ceil(3600) as usize)
    }
}

/// Event counts of one station, kind and (bin) date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DayVector {
    pub station: StationId,
    pub date: NaiveDate,
    pub kind: EventKind,
    /// `counts[b - 1]` is bin `b`.
    pub counts: [u32; HOURS],
}

impl DayVector {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    pub fn bin(&self, b: usize) -> u32 {
        self.counts[b - 1]
    }
}

/// Bins events that share one station, kind and bin date.
///
/// `date` is the bin date, i.e. after the midnight adjustment: an event at
/// `D 00:00:00` belongs to `date = D - 1`.
pub fn bin_events<'a>(
    station: &StationId,
    date: NaiveDate,
    kind: EventKind,
    events: impl IntoIterator<Item = &'a Event>,
) -> Result<DayVector, ProfileError> {
    let mut counts = [0u32; HOURS];
    for e in events {
        if &e.station != station || e.kind != kind {
            return Err(ProfileError::Contract(format!(
                "event ({}, {}) mixed into the bins of ({station}, {kind})",
                e.station, e.kind
            )));
        }
        let (bin_date, b) = bin_of(e.time);
        if bin_date != date {
            return Err(ProfileError::Contract(format!(
                "event at {} belongs to bin date {bin_date}, not {date}",
                e.time
            )));
        }
        counts[b - 1] += 1;
    }
    Ok(DayVector {
        station: station.clone(),
        date,
        kind,
        counts,
    })
}

/// Groups one station's events of one kind by bin date and bins each group.
pub fn day_vectors<'a>(
    station: &StationId,
    kind: EventKind,
    events: impl IntoIterator<Item = &'a Event>,
) -> Vec<DayVector> {
    let mut days: BTreeMap<NaiveDate, [u32; HOURS]> = BTreeMap::new();
    for e in events {
        if &e.station != station || e.kind != kind {
            continue;
        }
        let (date, b) = bin_of(e.time);
        days.entry(date).or_insert([0; HOURS])[b - 1] += 1;
    }
    days.into_iter()
        .map(|(date, counts)| DayVector {
            station: station.clone(),
            date,
            kind,
            counts,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedDayVector {
    pub station: StationId,
    pub date: NaiveDate,
    pub kind: EventKind,
    pub fractions: [f64; HOURS],
}

impl NormalizedDayVector {
    pub fn day_type(&self) -> DayType {
        DayType::of(self.date)
    }
}

pub fn normalize_day(v: &DayVector) -> Result<NormalizedDayVector, ProfileError> {
    let total = v.total();
    if total == 0 {
        return Err(ProfileError::NotDefinedForEmptyDay {
            station: v.station.clone(),
            date: v.date,
            kind: v.kind,
        });
    }
    let total = total as f64;
    Ok(NormalizedDayVector {
        station: v.station.clone(),
        date: v.date,
        kind: v.kind,
        fractions: v.counts.map(|c| c as f64 / total),
    })
}

/// Mean normalized weekday and weekend hourly distribution of one station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationProfile {
    pub station: StationId,
    pub kind: EventKind,
    pub weekday_profile: [f64; HOURS],
    pub weekend_profile: [f64; HOURS],
    pub active_weekdays: usize,
    pub active_weekend_days: usize,
}

impl StationProfile {
    /// Weekday half followed by weekend half.
    pub fn feature(&self) -> Vec<f64> {
        let mut f = Vec::with_capacity(FEATURE_DIM);
        f.extend_from_slice(&self.weekday_profile);
        f.extend_from_slice(&self.weekend_profile);
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExclusionReason {
    NoData,
    NoWeekdayData,
    NoWeekendData,
    LowActivity,
    Outlier,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum ProfileOutcome {
    Profile(StationProfile),
    Excluded {
        station: StationId,
        kind: EventKind,
        reason: ExclusionReason,
    },
}

/// Averages a station's normalized days, weekdays and weekend days separately,
/// with equal weight per day.
pub fn build_station_profile(days: &[NormalizedDayVector]) -> Result<ProfileOutcome, ProfileError> {
    let first = days
        .first()
        .ok_or_else(|| ProfileError::Contract("no day vectors for station profile".into()))?;
    let (station, kind) = (&first.station, first.kind);
    if let Some(odd) = days
        .iter()
        .find(|d| &d.station != station || d.kind != kind)
    {
        return Err(ProfileError::Contract(format!(
            "day vector ({}, {}) mixed into profile of ({station}, {kind})",
            odd.station, odd.kind
        )));
    }
    // Sum in date order so the result does not depend on input order.
    let mut ordered: Vec<&NormalizedDayVector> = days.iter().collect();
    ordered.sort_by_key(|d| d.date);
    let mut sums = [[0.0f64; HOURS]; 2];
    let mut counts = [0usize; 2];
    for d in ordered {
        let slot = d.day_type() as usize;
        counts[slot] += 1;
        for (acc, f) in sums[slot].iter_mut().zip(d.fractions) {
            *acc += f;
        }
    }
    let [weekdays, weekend_days] = counts;
    let reason = match (weekdays, weekend_days) {
        (0, 0) => Some(ExclusionReason::NoData),
        (0, _) => Some(ExclusionReason::NoWeekdayData),
        (_, 0) => Some(ExclusionReason::NoWeekendData),
        _ => None,
    };
    if let Some(reason) = reason {
        return Ok(ProfileOutcome::Excluded {
            station: station.clone(),
            kind,
            reason,
        });
    }
    let mean = |s: [f64; HOURS], n: usize| s.map(|x| x / n as f64);
    Ok(ProfileOutcome::Profile(StationProfile {
        station: station.clone(),
        kind,
        weekday_profile: mean(sums[0], weekdays),
        weekend_profile: mean(sums[1], weekend_days),
        active_weekdays: weekdays,
        active_weekend_days: weekend_days,
    }))
}

/// Profiles of every station of one kind in a quarter.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileSet {
    /// Sorted by station id.
    pub profiles: Vec<StationProfile>,
    pub excluded: BTreeMap<StationId, ExclusionReason>,
}

impl ProfileSet {
    pub fn features(&self) -> Vec<(StationId, Vec<f64>)> {
        self.profiles
            .iter()
            .map(|p| (p.station.clone(), p.feature()))
            .collect()
    }

    pub fn get(&self, station: &StationId) -> Option<&StationProfile> {
        self.profiles
            .binary_search_by(|p| p.station.cmp(station))
            .ok()
            .map(|i| &self.profiles[i])
    }

    /// Drops the given stations, recording them as excluded for `reason`.
    pub fn exclude(&mut self, stations: &BTreeSet<StationId>, reason: ExclusionReason) {
        self.profiles.retain(|p| {
            let drop = stations.contains(&p.station);
            if drop {
                self.excluded.insert(p.station.clone(), reason);
            }
            !drop
        });
    }
}

/// Builds the profiles of every station with `kind` events in `quarter`,
/// using only bin dates inside `span`. Stations in `skip` are recorded as
/// excluded for low activity.
pub fn build_profiles(
    quarter: &QuarterEvents,
    kind: EventKind,
    span: DateSpan,
    skip: &BTreeSet<StationId>,
) -> ProfileSet {
    let by_station = quarter.by_station();
    let outcomes: Vec<(StationId, Result<ProfileOutcome, ProfileError>)> = by_station
        .par_iter()
        .map(|(station, cells)| {
            let station = (*station).clone();
            if skip.contains(&station) {
                let outcome = ProfileOutcome::Excluded {
                    station: station.clone(),
                    kind,
                    reason: ExclusionReason::LowActivity,
                };
                return (station, Ok(outcome));
            }
            let events = cells.iter().flat_map(|(_, evs)| evs.iter());
            let days: Vec<NormalizedDayVector> = day_vectors(&station, kind, events)
                .iter()
                .filter(|v| span.contains(v.date))
                .filter_map(|v| normalize_day(v).ok())
                .collect();
            let outcome = if days.is_empty() {
                Ok(ProfileOutcome::Excluded {
                    station: station.clone(),
                    kind,
                    reason: ExclusionReason::NoData,
                })
            } else {
                build_station_profile(&days)
            };
            (station, outcome)
        })
        .collect();
    let mut set = ProfileSet::default();
    for (station, outcome) in outcomes {
        match outcome.expect("day vectors grouped per station and kind") {
            ProfileOutcome::Profile(p) => set.profiles.push(p),
            ProfileOutcome::Excluded { reason, .. } => {
                set.excluded.insert(station, reason);
            }
        }
    }
    // Stations with no events at all of this kind but listed in `skip`.
    for s in skip {
        if !set.excluded.contains_key(s) && set.get(s).is_none() {
            set.excluded.insert(s.clone(), ExclusionReason::LowActivity);
        }
    }
    set
}

/// Mean events per hour of the week: `[day_of_week][bin - 1]`, Monday first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourlyUsage {
    pub pickups: [[f64; HOURS]; 7],
    pub dropoffs: [[f64; HOURS]; 7],
}

impl HourlyUsage {
    pub fn for_kind(&self, kind: EventKind) -> &[[f64; HOURS]; 7] {
        match kind {
            EventKind::Pickup => &self.pickups,
            EventKind::Dropoff => &self.dropoffs,
        }
    }
}

/// Averages binned events over the calendar occurrences of each weekday in
/// `span`. Events whose bin date lies outside `span` are ignored.
pub fn hourly_usage_summary<'a>(
    events: impl IntoIterator<Item = &'a Event>,
    span: DateSpan,
) -> HourlyUsage {
    let mut totals = [[[0u64; HOURS]; 7]; 2];
    for e in events {
        let (date, b) = bin_of(e.time);
        if span.contains(date) {
            let dow = date.weekday().num_days_from_monday() as usize;
            totals[e.kind as usize][dow][b - 1] += 1;
        }
    }
    let mut occurrences = [0usize; 7];
    for d in span.dates() {
        occurrences[d.weekday().num_days_from_monday() as usize] += 1;
    }
    let average = |t: &[[u64; HOURS]; 7]| {
        let mut out = [[0.0; HOURS]; 7];
        for (dow, row) in out.iter_mut().enumerate() {
            if occurrences[dow] > 0 {
                for (cell, &n) in row.iter_mut().zip(&t[dow]) {
                    *cell = n as f64 / occurrences[dow] as f64;
                }
            }
        }
        out
    };
    HourlyUsage {
        pickups: average(&totals[0]),
        dropoffs: average(&totals[1]),
    }
}

fn profile_header() -> Vec<String> {
    let mut h = vec!["station_id".to_owned(), "kind".to_owned()];
    h.extend((1..=HOURS).map(|b| format!("wd_h{b}")));
    h.extend((1..=HOURS).map(|b| format!("we_h{b}")));
    h
}

/// One row per station: `station_id, kind, wd_h1..wd_h24, we_h1..we_h24`,
/// fractions with six decimals.
pub fn write_profiles_csv<W: Write>(
    sink: W,
    profiles: &[StationProfile],
) -> Result<(), ProfileError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(profile_header())?;
    for p in profiles {
        let mut row = vec![p.station.to_string(), p.kind.to_string()];
        row.extend(
            p.weekday_profile
                .iter()
                .chain(&p.weekend_profile)
                .map(|x| format!("{x:.6}")),
        );
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads the table written by [`write_profiles_csv`]. Active-day counts are
/// not part of the table and come back as zero.
pub fn read_profiles_csv<R: Read>(source: R) -> Result<Vec<StationProfile>, ProfileError> {
    let mut r = csv::Reader::from_reader(source);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != profile_header() {
        return Err(ProfileError::Table("unexpected header".into()));
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let kind: EventKind = rec[1].parse().map_err(ProfileError::Table)?;
        let mut values = [0.0f64; FEATURE_DIM];
        for (i, v) in values.iter_mut().enumerate() {
            *v = rec[i + 2]
                .parse()
                .map_err(|_| ProfileError::Table(format!("bad number `{}`", &rec[i + 2])))?;
        }
        let mut weekday_profile = [0.0; HOURS];
        let mut weekend_profile = [0.0; HOURS];
        weekday_profile.copy_from_slice(&values[..HOURS]);
        weekend_profile.copy_from_slice(&values[HOURS..]);
        out.push(StationProfile {
            station: StationId::new(&rec[0]),
            kind,
            weekday_profile,
            weekend_profile,
            active_weekdays: 0,
            active_weekend_days: 0,
        });
    }
    Ok(out)
}
