use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;
use rayon::prelude::*;

use super::record::{Event, EventKind, StationId, TripRecord};
use crate::calendar::Quarter;

/// Events of one quarter, grouped by station and event date.
///
/// Quarter membership follows the trip's start date, so a drop-off may carry a
/// date just past the quarter's last day.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuarterEvents {
    pub quarter: Quarter,
    pub trip_count: usize,
    /// Each cell is sorted by `(time, kind)`.
    pub cells: BTreeMap<(StationId, NaiveDate), Vec<Event>>,
}

impl QuarterEvents {
    pub fn new(quarter: Quarter) -> Self {
        Self {
            quarter,
            trip_count: 0,
            cells: BTreeMap::new(),
        }
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> {
        self.cells.values().flatten()
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events().filter(move |e| e.kind == kind)
    }

    pub fn stations(&self) -> BTreeSet<&StationId> {
        self.cells.keys().map(|(s, _)| s).collect()
    }

    /// All cells of one station, in date order.
    pub fn station_days<'a>(
        &'a self,
        station: &'a StationId,
    ) -> impl Iterator<Item = (NaiveDate, &'a [Event])> + 'a {
        let lo = (station.clone(), NaiveDate::MIN);
        let hi = (station.clone(), NaiveDate::MAX);
        self.cells
            .range(lo..=hi)
            .map(|((_, date), events)| (*date, events.as_slice()))
    }

    /// Groups cells by station: `station -> [(date, events)]`.
    pub fn by_station(&self) -> BTreeMap<&StationId, Vec<(NaiveDate, &[Event])>> {
        let mut out: BTreeMap<&StationId, Vec<(NaiveDate, &[Event])>> = BTreeMap::new();
        for ((station, date), events) in &self.cells {
            out.entry(station)
                .or_default()
                .push((*date, events.as_slice()));
        }
        out
    }
}

type Cells = HashMap<(StationId, NaiveDate), Vec<Event>>;

/// Splits trips into per-quarter event cells keyed by `(station, date)`.
pub fn partition_events(trips: &[TripRecord]) -> BTreeMap<Quarter, QuarterEvents> {
    let mut quarters: BTreeMap<Quarter, (usize, Cells)> = BTreeMap::new();
    for trip in trips {
        let quarter = Quarter::of(trip.start_time.date());
        let (count, cells) = quarters.entry(quarter).or_default();
        *count += 1;
        for event in trip.events() {
            cells
                .entry((event.station.clone(), event.day()))
                .or_default()
                .push(event);
        }
    }
    quarters
        .into_iter()
        .map(|(quarter, (trip_count, cells))| {
            let mut cells: Vec<_> = cells.into_iter().collect();
            cells
                .par_iter_mut()
                .for_each(|(_, events)| events.sort_by_key(Event::scan_key));
            let cells = cells.into_iter().collect();
            (
                quarter,
                QuarterEvents {
                    quarter,
                    trip_count,
                    cells,
                },
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDateTime;

    use super::*;
    use crate::ingest::{DayType, MemberType};

    fn at(s: &str) -> NaiveDateTime {
        NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").unwrap()
    }

    fn trip(id: &str, start: &str, end: &str) -> TripRecord {
        let (start, end) = (at(start), at(end));
        TripRecord {
            trip_id: id.into(),
            start_time: start,
            end_time: end,
            duration: (end - start).num_seconds() as u64,
            start_station: "A".into(),
            end_station: "B".into(),
            bike_id: "bike".into(),
            member_type: MemberType::Casual,
        }
    }

    #[test]
    fn quarter_by_start_date() {
        let parts = partition_events(&[trip("1", "2015-07-01 10:00:00", "2015-07-01 10:10:00")]);
        let q = parts.keys().next().unwrap();
        assert_eq!((q.year, q.quarter), (2015, 3));
        assert_eq!(parts[q].events().count(), 2);
    }

    #[test]
    fn midnight_spanning_trip() {
        let parts = partition_events(&[trip("1", "2015-07-04 23:50:00", "2015-07-05 00:10:00")]);
        assert_eq!(parts.len(), 1);
        let q3 = &parts[&Quarter::new(2015, 3).unwrap()];
        let pickup = q3.events_of(EventKind::Pickup).next().unwrap();
        let dropoff = q3.events_of(EventKind::Dropoff).next().unwrap();
        assert_eq!(pickup.day(), NaiveDate::from_ymd_opt(2015, 7, 4).unwrap());
        assert_eq!(dropoff.day(), NaiveDate::from_ymd_opt(2015, 7, 5).unwrap());
        assert_eq!(pickup.day_type(), DayType::Weekend);
        assert_eq!(dropoff.day_type(), DayType::Weekend);
    }

    #[test]
    fn weekday_q1() {
        let parts = partition_events(&[trip("1", "2015-01-06 08:00:00", "2015-01-06 08:20:00")]);
        let q1 = &parts[&Quarter::new(2015, 1).unwrap()];
        assert!(q1.events().all(|e| e.day_type() == DayType::Weekday));
    }

    #[test]
    fn quarter_boundary_overflow_stays_with_start() {
        let parts = partition_events(&[trip("1", "2015-09-30 23:55:00", "2015-10-01 00:20:00")]);
        assert_eq!(parts.len(), 1);
        let q3 = &parts[&Quarter::new(2015, 3).unwrap()];
        assert_eq!(q3.trip_count, 1);
        assert_eq!(q3.events_of(EventKind::Dropoff).count(), 1);
    }

    #[test]
    fn cells_sorted_pickup_first() {
        let mut a = trip("1", "2015-07-01 10:00:00", "2015-07-01 10:10:00");
        let mut b = trip("2", "2015-07-01 09:00:00", "2015-07-01 10:00:00");
        a.start_station = "S".into();
        b.end_station = "S".into();
        let parts = partition_events(&[a, b]);
        let q3 = parts.values().next().unwrap();
        let s = StationId::from("S");
        let (_, events) = q3.station_days(&s).next().unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[0].kind, EventKind::Pickup);
        assert_eq!(events[1].kind, EventKind::Dropoff);
    }
}
