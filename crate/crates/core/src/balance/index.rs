use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{day_extremes, BalanceError, BalanceWindow, DayExtremes};
use crate::calendar::DateSpan;
use crate::ingest::{QuarterEvents, StationId};

/// Mean daily maximum shortage and excess of one station over every date of
/// `span`. Dates without an entry in `days` count as zero; entries outside the
/// span are ignored.
pub fn adms_adme(days: &[DayExtremes], span: Option<DateSpan>) -> Result<(f64, f64), BalanceError> {
    let span = span.ok_or(BalanceError::EmptyQuarter)?;
    let (mut shortage, mut excess) = (0u64, 0u64);
    let mut seen: BTreeMap<NaiveDate, ()> = BTreeMap::new();
    for d in days.iter().filter(|d| span.contains(d.date)) {
        if seen.insert(d.date, ()).is_some() {
            return Err(BalanceError::Contract(format!(
                "date {} listed twice",
                d.date
            )));
        }
        shortage += d.max_shortage as u64;
        excess += d.max_excess as u64;
    }
    let n = span.len_days() as f64;
    Ok((shortage as f64 / n, excess as f64 / n))
}

/// Width-5 style severity bins: category 1 is `v <= bin_width`, category `c`
/// covers `((c-1) w, c w]`, and the last category is open-ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CategoryScheme {
    pub bin_width: f64,
    pub self_balanced_threshold: f64,
    pub categories: u8,
}

impl Default for CategoryScheme {
    fn default() -> Self {
        Self {
            bin_width: 5.0,
            self_balanced_threshold: 5.0,
            categories: 8,
        }
    }
}

impl CategoryScheme {
    pub fn category(&self, v: f64) -> u8 {
        if v <= self.bin_width {
            return 1;
        }
        let c = (v / self.bin_width).ceil();
        c.min(self.categories as f64) as u8
    }

    pub fn is_self_balanced(&self, adms: f64, adme: f64) -> bool {
        adms <= self.self_balanced_threshold && adme <= self.self_balanced_threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceIndex {
    pub station: StationId,
    pub window: String,
    pub adms: f64,
    pub adme: f64,
    pub category_by_adms: u8,
    pub category_by_adme: u8,
    pub category_combined: u8,
    pub self_balanced: bool,
}

impl BalanceIndex {
    pub fn new(
        station: StationId,
        window: &str,
        adms: f64,
        adme: f64,
        scheme: &CategoryScheme,
    ) -> Self {
        Self {
            station,
            window: window.to_owned(),
            adms,
            adme,
            category_by_adms: scheme.category(adms),
            category_by_adme: scheme.category(adme),
            category_combined: scheme.category(adms.max(adme)),
            self_balanced: scheme.is_self_balanced(adms, adme),
        }
    }

    /// Docks needed to ride out the average day without rebalancing.
    pub fn capacity_proxy(&self) -> f64 {
        self.adms + self.adme
    }
}

/// Which index drives a station's category on a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryMode {
    AdmeOnly,
    AdmsOnly,
    Combined,
}

impl CategoryMode {
    pub const ALL: [CategoryMode; 3] = [
        CategoryMode::AdmeOnly,
        CategoryMode::AdmsOnly,
        CategoryMode::Combined,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CategoryMode::AdmeOnly => "adme_only",
            CategoryMode::AdmsOnly => "adms_only",
            CategoryMode::Combined => "combined",
        }
    }

    pub fn category(self, index: &BalanceIndex) -> u8 {
        match self {
            CategoryMode::AdmeOnly => index.category_by_adme,
            CategoryMode::AdmsOnly => index.category_by_adms,
            CategoryMode::Combined => index.category_combined,
        }
    }
}

impl FromStr for CategoryMode {
    type Err = BalanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adme_only" | "adme" => Ok(CategoryMode::AdmeOnly),
            "adms_only" | "adms" => Ok(CategoryMode::AdmsOnly),
            "combined" | "both" => Ok(CategoryMode::Combined),
            other => Err(BalanceError::UnknownMode(other.to_owned())),
        }
    }
}

/// Indices of every station with events in `quarter`, for each window.
/// Output is ordered by window (as given), then station id.
pub fn compute_balance(
    quarter: &QuarterEvents,
    span: DateSpan,
    windows: &[BalanceWindow],
    scheme: &CategoryScheme,
) -> Result<Vec<BalanceIndex>, BalanceError> {
    let by_station: Vec<_> = quarter.by_station().into_iter().collect();
    let per_station: Vec<Vec<BalanceIndex>> = by_station
        .par_iter()
        .map(|(station, cells)| {
            windows
                .iter()
                .map(|w| {
                    let days = cells
                        .iter()
                        .filter(|(date, _)| span.contains(*date))
                        .map(|(date, events)| day_extremes(station, *date, w, events))
                        .collect::<Result<Vec<_>, _>>()?;
                    let (adms, adme) = adms_adme(&days, Some(span))?;
                    Ok(BalanceIndex::new(
                        (*station).clone(),
                        &w.label,
                        adms,
                        adme,
                        scheme,
                    ))
                })
                .collect::<Result<Vec<_>, BalanceError>>()
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(per_station.len() * windows.len());
    for w in 0..windows.len() {
        out.extend(per_station.iter().map(|s| s[w].clone()));
    }
    Ok(out)
}

/// Share of stations flagged self-balanced.
pub fn self_balanced_fraction<'a>(
    indices: impl IntoIterator<Item = &'a BalanceIndex>,
) -> Result<f64, BalanceError> {
    let (mut n, mut balanced) = (0usize, 0usize);
    for i in indices {
        n += 1;
        balanced += i.self_balanced as usize;
    }
    if n == 0 {
        return Err(BalanceError::EmptySet);
    }
    Ok(balanced as f64 / n as f64)
}

const CSV_HEADER: [&str; 9] = [
    "station_id",
    "window",
    "adms",
    "adme",
    "cat_adms",
    "cat_adme",
    "cat_combined",
    "self_balanced",
    "capacity_proxy",
];

/// Reals with six decimals; `capacity_proxy = adms + adme` trails the table.
pub fn write_balance_csv<W: Write>(sink: W, indices: &[BalanceIndex]) -> Result<(), BalanceError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(CSV_HEADER)?;
    for i in indices {
        w.write_record([
            i.station.to_string(),
            i.window.clone(),
            format!("{:.6}", i.adms),
            format!("{:.6}", i.adme),
            i.category_by_adms.to_string(),
            i.category_by_adme.to_string(),
            i.category_combined.to_string(),
            i.self_balanced.to_string(),
            format!("{:.6}", i.capacity_proxy()),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_balance_csv<R: Read>(source: R) -> Result<Vec<BalanceIndex>, BalanceError> {
    let mut r = csv::Reader::from_reader(source);
    if r.headers()?.iter().ne(CSV_HEADER) {
        return Err(BalanceError::Table("unexpected header".into()));
    }
    let bad = |what: &str, v: &str| BalanceError::Table(format!("bad {what} `{v}`"));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let real = |i: usize| {
            rec[i]
                .parse::<f64>()
                .map_err(|_| bad(CSV_HEADER[i], &rec[i]))
        };
        let cat = |i: usize| {
            rec[i]
                .parse::<u8>()
                .map_err(|_| bad(CSV_HEADER[i], &rec[i]))
        };
        out.push(BalanceIndex {
            station: StationId::new(&rec[0]),
            window: rec[1].to_owned(),
            adms: real(2)?,
            adme: real(3)?,
            category_by_adms: cat(4)?,
            category_by_adme: cat(5)?,
            category_combined: cat(6)?,
            self_balanced: rec[7].parse().map_err(|_| bad("self_balanced", &rec[7]))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn day(date: u32, shortage: u32, excess: u32) -> DayExtremes {
        DayExtremes {
            station: "S".into(),
            date: NaiveDate::from_ymd_opt(2015, 7, date).unwrap(),
            window: "full_day".into(),
            max_shortage: shortage,
            max_excess: excess,
        }
    }

    fn span(first: u32, last: u32) -> Option<DateSpan> {
        DateSpan::new(
            NaiveDate::from_ymd_opt(2015, 7, first).unwrap(),
            NaiveDate::from_ymd_opt(2015, 7, last).unwrap(),
        )
    }

    #[test]
    fn averages_over_all_days() {
        assert_eq!(
            adms_adme(&[day(1, 2, 0), day(2, 4, 1)], span(1, 2)).unwrap(),
            (3.0, 0.5)
        );
        assert_eq!(
            adms_adme(&[day(3, 10, 0)], span(1, 10)).unwrap(),
            (1.0, 0.0)
        );
        assert_eq!(adms_adme(&[], span(1, 10)).unwrap(), (0.0, 0.0));
        assert!(matches!(
            adms_adme(&[], None),
            Err(BalanceError::EmptyQuarter)
        ));
        assert!(adms_adme(&[day(1, 1, 0), day(1, 1, 0)], span(1, 2)).is_err());
    }

    #[test]
    fn categories() {
        let s = CategoryScheme::default();
        assert_eq!(s.category(0.0), 1);
        assert_eq!(s.category(5.0), 1);
        assert_eq!(s.category(5.000001), 2);
        assert_eq!(s.category(10.0), 2);
        assert_eq!(s.category(22.0), 5);
        assert_eq!(s.category(35.0), 7);
        assert_eq!(s.category(35.5), 8);
        assert_eq!(s.category(400.0), 8);
    }

    #[test]
    fn index_fields() {
        let s = CategoryScheme::default();
        let i = BalanceIndex::new("S".into(), "full_day", 3.0, 4.0, &s);
        assert!(i.self_balanced);
        assert_eq!(i.category_combined, 1);
        let i = BalanceIndex::new("S".into(), "morning", 22.0, 4.0, &s);
        assert_eq!(
            (i.category_by_adms, i.category_by_adme, i.category_combined),
            (5, 1, 5)
        );
        assert!(!i.self_balanced);
        assert_eq!(i.capacity_proxy(), 26.0);
    }

    #[test]
    fn fractions() {
        let s = CategoryScheme::default();
        let idx = [
            BalanceIndex::new("a".into(), "w", 1.0, 1.0, &s),
            BalanceIndex::new("b".into(), "w", 9.0, 1.0, &s),
            BalanceIndex::new("c".into(), "w", 5.0, 5.0, &s),
            BalanceIndex::new("d".into(), "w", 1.0, 7.0, &s),
        ];
        assert_eq!(self_balanced_fraction(&idx).unwrap(), 0.5);
        assert!(matches!(
            self_balanced_fraction(&[]),
            Err(BalanceError::EmptySet)
        ));
    }

    #[test]
    fn modes_parse() {
        assert_eq!(
            "adms_only".parse::<CategoryMode>().unwrap(),
            CategoryMode::AdmsOnly
        );
        assert!(matches!(
            "heatmap".parse::<CategoryMode>(),
            Err(BalanceError::UnknownMode(_))
        ));
    }

    #[test]
    fn csv_round_trip_at_six_decimals() {
        let s = CategoryScheme::default();
        let idx = vec![BalanceIndex::new("a".into(), "midday", 1.0 / 3.0, 22.5, &s)];
        let mut buf = Vec::new();
        write_balance_csv(&mut buf, &idx).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "a,midday,0.333333,22.500000,1,5,5,false,22.833333"
        );
        let back = read_balance_csv(buf.as_slice()).unwrap();
        assert_eq!(back[0].adms, 0.333333);
        assert_eq!(back[0].category_combined, 5);
    }
}
