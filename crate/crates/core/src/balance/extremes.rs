use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{BalanceError, BalanceWindow};
use crate::ingest::{Event, EventKind, StationId};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extremes {
    pub max_shortage: u32,
    pub max_excess: u32,
}

/// Runs the shortage counter over a sequence: +1 per pickup, -1 per drop-off,
/// starting from zero. Shortage is the highest positive value reached, excess
/// the magnitude of the lowest negative one.
pub fn scan_extremes(kinds: impl IntoIterator<Item = EventKind>) -> Extremes {
    let mut counter: i64 = 0;
    let (mut high, mut low) = (0i64, 0i64);
    for kind in kinds {
        counter += match kind {
            EventKind::Pickup => 1,
            EventKind::Dropoff => -1,
        };
        high = high.max(counter);
        low = low.min(counter);
    }
    Extremes {
        max_shortage: high as u32,
        max_excess: (-low) as u32,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayExtremes {
    pub station: StationId,
    pub date: NaiveDate,
    pub window: String,
    pub max_shortage: u32,
    pub max_excess: u32,
}

/// Extremes of one station on one date within `window`.
///
/// `events` must be sorted by `(time, kind)` (pickups first at equal times)
/// and belong to `station` and `date`; events outside the window are skipped.
pub fn day_extremes(
    station: &StationId,
    date: NaiveDate,
    window: &BalanceWindow,
    events: &[Event],
) -> Result<DayExtremes, BalanceError> {
    if let Some(w) = events
        .windows(2)
        .find(|w| w[0].scan_key() > w[1].scan_key())
    {
        return Err(BalanceError::Contract(format!(
            "events not sorted: {:?} {} before {:?} {}",
            w[0].kind, w[0].time, w[1].kind, w[1].time
        )));
    }
    if let Some(e) = events
        .iter()
        .find(|e| &e.station != station || e.day() != date)
    {
        return Err(BalanceError::Contract(format!(
            "event of {} on {} passed for {station} on {date}",
            e.station,
            e.day()
        )));
    }
    let ex = scan_extremes(
        events
            .iter()
            .filter(|e| window.contains(e.time.time()))
            .map(|e| e.kind),
    );
    Ok(DayExtremes {
        station: station.clone(),
        date,
        window: window.label.clone(),
        max_shortage: ex.max_shortage,
        max_excess: ex.max_excess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use EventKind::{Dropoff as D, Pickup as P};

    #[test]
    fn alternating_is_one_zero() {
        let seq = [P, D].repeat(10);
        assert_eq!(
            scan_extremes(seq),
            Extremes {
                max_shortage: 1,
                max_excess: 0
            }
        );
    }

    #[test]
    fn block_is_n_zero() {
        for n in [1, 5, 50] {
            let seq: Vec<EventKind> = std::iter::repeat_n(P, n)
                .chain(std::iter::repeat_n(D, n))
                .collect();
            let ex = scan_extremes(seq);
            assert_eq!((ex.max_shortage, ex.max_excess), (n as u32, 0));
        }
    }

    #[test]
    fn empty_and_mixed() {
        assert_eq!(scan_extremes([]), Extremes::default());
        let ex = scan_extremes([P, P, D, D, D, P]);
        assert_eq!((ex.max_shortage, ex.max_excess), (2, 1));
        let ex = scan_extremes([D, D, P]);
        assert_eq!((ex.max_shortage, ex.max_excess), (0, 2));
    }

    fn ev(h: u32, m: u32, kind: EventKind) -> Event {
        let t = NaiveDate::from_ymd_opt(2015, 7, 1)
            .unwrap()
            .and_hms_opt(h, m, 0)
            .unwrap();
        Event::new("S".into(), t, kind)
    }

    #[test]
    fn window_and_contract() {
        let s = StationId::from("S");
        let date = NaiveDate::from_ymd_opt(2015, 7, 1).unwrap();
        let morning = &super::super::standard_windows()[1];
        let events = vec![
            ev(5, 0, D),
            ev(5, 30, D),
            ev(7, 0, P),
            ev(7, 0, D),
            ev(12, 0, P),
        ];
        let d = day_extremes(&s, date, morning, &events).unwrap();
        // The counter resets at the window start: only the 07:00 pair counts.
        assert_eq!((d.max_shortage, d.max_excess), (1, 0));
        assert_eq!(d.window, "morning");

        let unsorted = vec![ev(7, 0, D), ev(7, 0, P)];
        assert!(matches!(
            day_extremes(&s, date, morning, &unsorted),
            Err(BalanceError::Contract(_))
        ));
        assert!(day_extremes(&"T".into(), date, morning, &events).is_err());
    }
}
