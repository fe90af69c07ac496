//! Calendar quarters and inclusive date spans.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

/// An inclusive range of calendar dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DateSpan {
    pub first: NaiveDate,
    pub last: NaiveDate,
}

impl DateSpan {
    /// Returns `None` when `last` precedes `first`.
    pub fn new(first: NaiveDate, last: NaiveDate) -> Option<Self> {
        (first <= last).then_some(Self { first, last })
    }

    pub fn single(date: NaiveDate) -> Self {
        Self {
            first: date,
            last: date,
        }
    }

    pub fn len_days(&self) -> usize {
        (self.last - self.first).num_days() as usize + 1
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.first <= date && date <= self.last
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.first.iter_days().take_while(move |d| *d <= self.last)
    }

    /// How many times `weekday` occurs in the span.
    pub fn weekday_occurrences(&self, weekday: Weekday) -> usize {
        self.dates().filter(|d| d.weekday() == weekday).count()
    }
}

/// Three-month calendar quarter; Q1 is January to March.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Quarter {
    pub year: i32,
    pub quarter: u8,
}

impl Quarter {
    pub fn new(year: i32, quarter: u8) -> Option<Self> {
        (1..=4).contains(&quarter).then_some(Self { year, quarter })
    }

    pub fn of(date: NaiveDate) -> Self {
        Self {
            year: date.year(),
            quarter: ((date.month0() / 3) + 1) as u8,
        }
    }

    pub fn first_day(&self) -> NaiveDate {
        let month = (self.quarter as u32 - 1) * 3 + 1;
        NaiveDate::from_ymd_opt(self.year, month, 1).expect("valid quarter start")
    }

    pub fn last_day(&self) -> NaiveDate {
        let next = if self.quarter == 4 {
            NaiveDate::from_ymd_opt(self.year + 1, 1, 1)
        } else {
            NaiveDate::from_ymd_opt(self.year, self.quarter as u32 * 3 + 1, 1)
        };
        next.and_then(|d| d.pred_opt()).expect("valid quarter end")
    }

    pub fn span(&self) -> DateSpan {
        DateSpan {
            first: self.first_day(),
            last: self.last_day(),
        }
    }

    /// Calendar day count, used as the denominator of daily averages.
    pub fn days(&self) -> usize {
        self.span().len_days()
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-Q{}", self.year, self.quarter)
    }
}

impl FromStr for Quarter {
    type Err = String;

    /// Accepts `2015-Q3`, `2015Q3` or `2015-3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid quarter `{s}` (expected e.g. 2015-Q3)");
        let t = s.trim().to_ascii_uppercase();
        let (year, q) = t
            .split_once("-Q")
            .or_else(|| t.split_once('Q'))
            .or_else(|| t.split_once('-'))
            .ok_or_else(bad)?;
        let year: i32 = year.trim_end_matches('-').parse().map_err(|_| bad())?;
        let q: u8 = q.parse().map_err(|_| bad())?;
        Quarter::new(year, q).ok_or_else(bad)
    }
}
