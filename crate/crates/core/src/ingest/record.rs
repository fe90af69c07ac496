use std::fmt;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Weekday};
use serde::{Deserialize, Serialize};

/// Identifier of a docking station as it appears in the trip files.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationId(String);

impl StationId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StationId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for StationId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberType {
    Member,
    Casual,
    Unknown,
}

impl MemberType {
    /// Maps the operator's rider labels. "Registered" is the pre-2015 name for members.
    pub fn parse(raw: &str) -> Self {
        let raw = raw.trim();
        if raw.eq_ignore_ascii_case("member") || raw.eq_ignore_ascii_case("registered") {
            MemberType::Member
        } else if raw.eq_ignore_ascii_case("casual") {
            MemberType::Casual
        } else {
            MemberType::Unknown
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            MemberType::Member => "Member",
            MemberType::Casual => "Casual",
            MemberType::Unknown => "Unknown",
        }
    }
}

/// One rental as read from the trip history files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripRecord {
    pub trip_id: String,
    pub start_time: NaiveDateTime,
    pub end_time: NaiveDateTime,
    /// Seconds, as recorded by the operator.
    pub duration: u64,
    pub start_station: StationId,
    pub end_station: StationId,
    pub bike_id: String,
    pub member_type: MemberType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    // Declaration order matters: pickups sort before drop-offs at equal timestamps.
    Pickup,
    Dropoff,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Pickup => "pickup",
            EventKind::Dropoff => "dropoff",
        }
    }

    pub fn swapped(self) -> Self {
        match self {
            EventKind::Pickup => EventKind::Dropoff,
            EventKind::Dropoff => EventKind::Pickup,
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pickup" | "pickups" => Ok(EventKind::Pickup),
            "dropoff" | "dropoffs" | "drop-off" | "drop-offs" => Ok(EventKind::Dropoff),
            other => Err(format!(
                "unknown event kind `{other}` (expected pickup or dropoff)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayType {
    Weekday,
    Weekend,
}

impl DayType {
    /// Holidays are not distinguished; only Saturday and Sunday are weekend days.
    pub fn of(date: NaiveDate) -> Self {
        match date.weekday() {
            Weekday::Sat | Weekday::Sun => DayType::Weekend,
            _ => DayType::Weekday,
        }
    }
}

/// A single pickup or drop-off at a station.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event {
    pub station: StationId,
    pub time: NaiveDateTime,
    pub kind: EventKind,
}

impl Event {
    pub fn new(station: StationId, time: NaiveDateTime, kind: EventKind) -> Self {
        Self {
            station,
            time,
            kind,
        }
    }

    pub fn day(&self) -> NaiveDate {
        self.time.date()
    }

    pub fn day_type(&self) -> DayType {
        DayType::of(self.day())
    }

    /// Ordering used by the shortage scan: time, then pickups before drop-offs.
    pub fn scan_key(&self) -> (NaiveDateTime, EventKind) {
        (self.time, self.kind)
    }
}

impl TripRecord {
    /// Expands the trip into its pickup and drop-off events.
    pub fn events(&self) -> [Event; 2] {
        [
            Event::new(
                self.start_station.clone(),
                self.start_time,
                EventKind::Pickup,
            ),
            Event::new(self.end_station.clone(), self.end_time, EventKind::Dropoff),
        ]
    }
}

/// Station identity and location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationInfo {
    pub id: StationId,
    pub name: String,
    pub latitude: f64,
    pub longitude: f64,
}
