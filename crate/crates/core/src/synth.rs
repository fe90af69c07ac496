//! Synthetic trips with planted hourly archetypes, and scripted station-days
//! with known shortage/excess extremes.
//!
//! Each station belongs to one archetype. For every station and date the
//! archetype's shape (weekday or weekend) is scaled to the daily volume,
//! perturbed by mean-one log-normal noise per bin and apportioned into integer
//! counts. Every pickup becomes a trip to the next station of the same
//! archetype that ends within the same hour bin, so drop-off profiles carry
//! the same archetype as pickup profiles.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::balance::Extremes;
use crate::calendar::DateSpan;
use crate::ingest::{
    sort_trips, DayType, Event, EventKind, MemberType, StationId, StationInfo, TripRecord,
};
use crate::profiles::HOURS;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid archetype `{name}`: {reason}")]
    InvalidSpec { name: String, reason: String },
    #[error("at least one archetype is required")]
    NoArchetypes,
    #[error("need at least two stations in total to form trips, got {0}")]
    TooFewStations(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeSpec {
    pub name: String,
    pub weekday_shape: [f64; HOURS],
    pub weekend_shape: [f64; HOURS],
    /// Mean pickups per station and day.
    pub daily_volume: f64,
    /// Standard deviation of the log of the per-bin noise factor.
    pub noise_scale: f64,
}

impl ArchetypeSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |reason: String| SynthError::InvalidSpec {
            name: self.name.clone(),
            reason,
        };
        for (label, shape) in [
            ("weekday", &self.weekday_shape),
            ("weekend", &self.weekend_shape),
        ] {
            if let Some(w) = shape.iter().find(|w| !w.is_finite() || **w < 0.0) {
                return Err(bad(format!("{label} shape has weight {w}")));
            }
            if shape.iter().sum::<f64>() <= 0.0 {
                return Err(bad(format!("{label} shape has no positive weight")));
            }
        }
        if !self.daily_volume.is_finite() || self.daily_volume < 1.0 {
            return Err(bad(format!(
                "daily volume {} yields no events; at least 1 per day is required",
                self.daily_volume
            )));
        }
        if !self.noise_scale.is_finite() || self.noise_scale < 0.0 {
            return Err(bad(format!("noise scale {} is negative", self.noise_scale)));
        }
        Ok(())
    }

    pub fn shape(&self, day: DayType) -> &[f64; HOURS] {
        match day {
            DayType::Weekday => &self.weekday_shape,
            DayType::Weekend => &self.weekend_shape,
        }
    }

    /// The shape for `day` scaled to unit sum.
    pub fn normalized(&self, day: DayType) -> [f64; HOURS] {
        let shape = self.shape(day);
        let total: f64 = shape.iter().sum();
        shape.map(|w| w / total)
    }
}

fn bumps(peaks: &[(f64, f64)], base: f64) -> [f64; HOURS] {
    std::array::from_fn(|i| {
        let h = (i + 1) as f64;
        base + peaks
            .iter()
            .map(|&(mu, sd)| (-0.5 * ((h - mu) / sd).powi(2)).exp())
            .sum::<f64>()
    })
}

/// Morning-peaked, evening-peaked and bimodal commuter shapes.
pub fn standard_archetypes(daily_volume: f64, noise_scale: f64) -> Vec<ArchetypeSpec> {
    let make = |name: &str, weekday: [f64; HOURS], weekend: [f64; HOURS]| ArchetypeSpec {
        name: name.into(),
        weekday_shape: weekday,
        weekend_shape: weekend,
        daily_volume,
        noise_scale,
    };
    vec![
        make(
            "morning_peak",
            bumps(&[(9.0, 1.2)], 0.02),
            bumps(&[(11.0, 2.0)], 0.02),
        ),
        make(
            "evening_peak",
            bumps(&[(18.0, 1.2)], 0.02),
            bumps(&[(16.0, 2.0)], 0.02),
        ),
        make(
            "bimodal",
            bumps(&[(8.5, 1.0), (17.5, 1.0)], 0.02),
            bumps(&[(13.5, 3.0)], 0.05),
        ),
    ]
}

/// Known extremes of one station on one date within one window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedExtremes {
    pub station: StationId,
    pub date: NaiveDate,
    pub window: String,
    pub max_shortage: u32,
    pub max_excess: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub seed: u64,
    pub station_archetype: BTreeMap<StationId, String>,
    pub planted_extremes: Vec<PlantedExtremes>,
}

impl SynthTruth {
    /// Archetype labels aligned with `stations`; `None` for unknown stations.
    pub fn labels_for<'a>(
        &self,
        stations: impl IntoIterator<Item = &'a StationId>,
    ) -> Vec<Option<&str>> {
        stations
            .into_iter()
            .map(|s| self.station_archetype.get(s).map(String::as_str))
            .collect()
    }
}

/// Station ids are numbered from this value, in archetype order.
pub const FIRST_STATION_NUMBER: u32 = 31000;

fn station_id(index: usize) -> StationId {
    StationId::new((FIRST_STATION_NUMBER + index as u32).to_string())
}

/// Splits `total` into integers proportional to `weights` (largest remainder,
/// ties to the lower bin).
fn apportion(total: u32, weights: &[f64; HOURS]) -> [u32; HOURS] {
    let sum: f64 = weights.iter().sum();
    let quotas = weights.map(|w| w / sum * total as f64);
    let mut counts = quotas.map(|q| q.floor() as u32);
    let assigned: u32 = counts.iter().sum();
    let mut order: Vec<usize> = (0..HOURS).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &b in order.iter().take(total.saturating_sub(assigned) as usize) {
        counts[b] += 1;
    }
    counts
}

/// Per-bin pickup counts for one station-day.
fn day_counts(spec: &ArchetypeSpec, day: DayType, rng: &mut ChaCha8Rng) -> [u32; HOURS] {
    let p = spec.normalized(day);
    let s = spec.noise_scale;
    let intensity: [f64; HOURS] = std::array::from_fn(|b| {
        let z: f64 = StandardNormal.sample(rng);
        spec.daily_volume * p[b] * (s * z - 0.5 * s * s).exp()
    });
    let total = intensity.iter().sum::<f64>().round().max(1.0) as u32;
    apportion(total, &intensity)
}

fn day_rng(seed: u64, station: usize, day: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((station as u64) << 32) | day as u64);
    rng
}

/// Generates `stations_per_archetype` stations for each archetype over `dates`.
///
/// Output is sorted by `(start_time, trip_id)` and identical for a given seed
/// regardless of the thread pool size.
pub fn generate_trips(
    archetypes: &[ArchetypeSpec],
    stations_per_archetype: usize,
    dates: DateSpan,
    seed: u64,
) -> Result<(Vec<TripRecord>, SynthTruth), SynthError> {
    if archetypes.is_empty() {
        return Err(SynthError::NoArchetypes);
    }
    for a in archetypes {
        a.validate()?;
    }
    let n = archetypes.len() * stations_per_archetype;
    if n < 2 {
        return Err(SynthError::TooFewStations(n));
    }
    // Ring partner: the next station of the same archetype, or simply the next
    // station when an archetype has a single member.
    let partner = |i: usize| {
        if stations_per_archetype >= 2 {
            let group = i / stations_per_archetype * stations_per_archetype;
            group + (i - group + 1) % stations_per_archetype
        } else {
            (i + 1) % n
        }
    };
    let dates: Vec<NaiveDate> = dates.dates().collect();

    let mut trips: Vec<TripRecord> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let spec = &archetypes[i / stations_per_archetype];
            let (from, to) = (station_id(i), station_id(partner(i)));
            let mut out = Vec::new();
            for (d, &date) in dates.iter().enumerate() {
                let mut rng = day_rng(seed, i, d);
                let counts = day_counts(spec, DayType::of(date), &mut rng);
                let midnight = date.and_time(NaiveTime::MIN);
                let mut seq = 0usize;
                for (b, &c) in counts.iter().enumerate() {
                    for _ in 0..c {
                        // Pickup in (b, b + 2400 s]; the ride of 120..=1200 s ends
                        // no later than b + 3600 s, so both events share bin b + 1.
                        let offset = rng.random_range(1..=2400i64);
                        let ride = rng.random_range(120..=1200i64);
                        let start = midnight + Duration::seconds(b as i64 * 3600 + offset);
                        out.push(TripRecord {
                            trip_id: format!("syn-{from}-{}-{seq:05}", date.format("%Y%m%d")),
                            start_time: start,
                            end_time: start + Duration::seconds(ride),
                            duration: ride as u64,
                            start_station: from.clone(),
                            end_station: to.clone(),
                            bike_id: format!("B{:05}", rng.random_range(0..100_000u32)),
                            member_type: MemberType::Member,
                        });
                        seq += 1;
                    }
                }
            }
            out
        })
        .collect();
    sort_trips(&mut trips);

    let truth = SynthTruth {
        seed,
        station_archetype: (0..n)
            .map(|i| {
                (
                    station_id(i),
                    archetypes[i / stations_per_archetype].name.clone(),
                )
            })
            .collect(),
        planted_extremes: Vec::new(),
    };
    Ok((trips, truth))
}

/// Grid of coordinates around central Washington, DC, one point per station.
pub fn synthetic_catalog(truth: &SynthTruth) -> Vec<StationInfo> {
    let n = truth.station_archetype.len();
    let side = (n as f64).sqrt().ceil().max(1.0) as usize;
    truth
        .station_archetype
        .iter()
        .enumerate()
        .map(|(i, (id, archetype))| StationInfo {
            id: id.clone(),
            name: format!("Synthetic {id} ({archetype})"),
            latitude: 38.85 + 0.1 * (i / side) as f64 / side as f64,
            longitude: -77.10 + 0.1 * (i % side) as f64 / side as f64,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScriptPattern {
    /// `n` events alternating pickup, drop-off, pickup, ...
    Alternating(usize),
    /// `n` pickups followed by `n` drop-offs.
    Block(usize),
    Custom(Vec<EventKind>),
}

impl ScriptPattern {
    pub fn kinds(&self) -> Vec<EventKind> {
        match self {
            ScriptPattern::Alternating(n) => (0..*n)
                .map(|i| {
                    if i % 2 == 0 {
                        EventKind::Pickup
                    } else {
                        EventKind::Dropoff
                    }
                })
                .collect(),
            ScriptPattern::Block(n) => std::iter::repeat_n(EventKind::Pickup, *n)
                .chain(std::iter::repeat_n(EventKind::Dropoff, *n))
                .collect(),
            ScriptPattern::Custom(kinds) => kinds.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedDay {
    pub station: StationId,
    pub date: NaiveDate,
    pub events: Vec<Event>,
    pub truth: Extremes,
}

/// Time of the first scripted event; events follow every [`SCRIPT_STEP_S`] seconds.
pub const SCRIPT_START: NaiveTime = match NaiveTime::from_hms_opt(7, 0, 0) {
    Some(t) => t,
    None => unreachable!(),
};
pub const SCRIPT_STEP_S: i64 = 20;

/// Extremes of a +1/-1 sequence from its prefix sums.
pub fn prefix_sum_extremes(kinds: &[EventKind]) -> Extremes {
    let prefix: Vec<i64> = kinds
        .iter()
        .scan(0i64, |acc, k| {
            *acc += if *k == EventKind::Pickup { 1 } else { -1 };
            Some(*acc)
        })
        .collect();
    let high = prefix.iter().copied().max().unwrap_or(0).max(0);
    let low = prefix.iter().copied().min().unwrap_or(0).min(0);
    Extremes {
        max_shortage: high as u32,
        max_excess: (-low) as u32,
    }
}

/// Lays the pattern out at distinct, increasing times from 07:00 on `date`.
pub fn generate_shortage_script(
    pattern: &ScriptPattern,
    station: StationId,
    date: NaiveDate,
) -> ScriptedDay {
    let kinds = pattern.kinds();
    let start = date.and_time(SCRIPT_START);
    let events = kinds
        .iter()
        .enumerate()
        .map(|(i, &kind)| {
            Event::new(
                station.clone(),
                start + Duration::seconds(i as i64 * SCRIPT_STEP_S),
                kind,
            )
        })
        .collect();
    ScriptedDay {
        station,
        date,
        events,
        truth: prefix_sum_extremes(&kinds),
    }
}

impl ScriptedDay {
    /// Trips producing exactly this day's events at the scripted station; the
    /// other end of each trip is `partner`, 600 s away.
    pub fn to_trips(&self, partner: &StationId) -> Vec<TripRecord> {
        const RIDE: i64 = 600;
        self.events
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let (start_time, start_station, end_station) = match e.kind {
                    EventKind::Pickup => (e.time, e.station.clone(), partner.clone()),
                    EventKind::Dropoff => (
                        e.time - Duration::seconds(RIDE),
                        partner.clone(),
                        e.station.clone(),
                    ),
                };
                TripRecord {
                    trip_id: format!(
                        "script-{}-{}-{i:05}",
                        self.station,
                        self.date.format("%Y%m%d")
                    ),
                    start_time,
                    end_time: start_time + Duration::seconds(RIDE),
                    duration: RIDE as u64,
                    start_station,
                    end_station,
                    bike_id: format!("S{i:05}"),
                    member_type: MemberType::Member,
                }
            })
            .collect()
    }

    pub fn planted(&self, window: &str) -> PlantedExtremes {
        PlantedExtremes {
            station: self.station.clone(),
            date: self.date,
            window: window.into(),
            max_shortage: self.truth.max_shortage,
            max_excess: self.truth.max_excess,
        }
    }
}

/// Time stamp helper for callers building their own scripts.
pub fn script_time(date: NaiveDate, index: usize) -> NaiveDateTime {
    date.and_time(SCRIPT_START) + Duration::seconds(index as i64 * SCRIPT_STEP_S)
}
