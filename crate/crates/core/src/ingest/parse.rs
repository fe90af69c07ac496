use std::io::{Read, Write};

use chrono::{NaiveDate, NaiveDateTime};
use csv::{ByteRecord, ReaderBuilder, WriterBuilder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{MemberType, StationId, TripRecord};
use super::IngestError;

pub const DEFAULT_TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

const CHUNK_ROWS: usize = 65_536;

/// Header names of the trip schema fields.
///
/// Defaults follow the 2015 Capital Bikeshare trip history header.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    /// Optional explicit trip identifier; when absent, the data row number is used.
    pub trip_id: Option<String>,
    pub duration: String,
    pub start_time: String,
    pub end_time: String,
    pub start_station: String,
    pub end_station: String,
    pub bike_id: String,
    pub member_type: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            trip_id: None,
            duration: "Duration".into(),
            start_time: "Start date".into(),
            end_time: "End date".into(),
            start_station: "Start station number".into(),
            end_station: "End station number".into(),
            bike_id: "Bike number".into(),
            member_type: "Member type".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationUnit {
    #[default]
    Seconds,
    Milliseconds,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParseOptions {
    pub columns: ColumnMap,
    pub delimiter: char,
    /// chrono `strftime` pattern.
    pub timestamp_format: String,
    pub duration_unit: DurationUnit,
    /// Allowed gap between the duration field and `end - start` before a warning is raised.
    pub duration_tolerance_s: u64,
    /// Prepended to generated row-number trip ids, to keep ids unique across files.
    pub trip_id_prefix: String,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            columns: ColumnMap::default(),
            delimiter: ',',
            timestamp_format: DEFAULT_TIMESTAMP_FORMAT.into(),
            duration_unit: DurationUnit::Seconds,
            duration_tolerance_s: 60,
            trip_id_prefix: String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    /// The row was excluded.
    Error,
    /// The row was kept.
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowDiagnostic {
    /// 1-based data row number (the header is row 0).
    pub row: u64,
    pub trip_id: String,
    pub severity: Severity,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedTrips {
    /// Well-formed records ordered by `(start_time, trip_id)`.
    pub trips: Vec<TripRecord>,
    pub diagnostics: Vec<RowDiagnostic>,
    pub rows_read: u64,
}

impl ParsedTrips {
    pub fn errors(&self) -> impl Iterator<Item = &RowDiagnostic> {
        self.diagnostics
            .iter()
            .filter(|d| d.severity == Severity::Error)
    }

    /// Folds another file's output into this one, keeping the global ordering.
    pub fn merge(&mut self, other: ParsedTrips) {
        self.trips.extend(other.trips);
        self.diagnostics.extend(other.diagnostics);
        self.rows_read += other.rows_read;
        sort_trips(&mut self.trips);
    }
}

pub fn sort_trips(trips: &mut [TripRecord]) {
    trips.sort_by(|a, b| {
        a.start_time
            .cmp(&b.start_time)
            .then_with(|| a.trip_id.cmp(&b.trip_id))
    });
}

#[derive(Debug, Clone, Copy)]
struct FieldIndex {
    trip_id: Option<usize>,
    duration: usize,
    start_time: usize,
    end_time: usize,
    start_station: usize,
    end_station: usize,
    bike_id: usize,
    member_type: usize,
}

impl FieldIndex {
    fn resolve(header: &ByteRecord, columns: &ColumnMap) -> Result<Self, IngestError> {
        let find = |field: &'static str, name: &str| -> Result<usize, IngestError> {
            header
                .iter()
                .position(|h| trim_bom(h) == name.as_bytes())
                .ok_or_else(|| IngestError::MissingColumn {
                    field,
                    column: name.to_owned(),
                })
        };
        Ok(Self {
            trip_id: columns
                .trip_id
                .as_deref()
                .map(|n| find("trip_id", n))
                .transpose()?,
            duration: find("duration", &columns.duration)?,
            start_time: find("start_time", &columns.start_time)?,
            end_time: find("end_time", &columns.end_time)?,
            start_station: find("start_station", &columns.start_station)?,
            end_station: find("end_station", &columns.end_station)?,
            bike_id: find("bike_id", &columns.bike_id)?,
            member_type: find("member_type", &columns.member_type)?,
        })
    }
}

fn trim_bom(field: &[u8]) -> &[u8] {
    let field = field.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(field);
    field.trim_ascii()
}

/// Reads delimiter-separated trip rows.
///
/// A missing mapped column aborts the whole read; problems confined to one row
/// produce a [`RowDiagnostic`] and the row is skipped.
pub fn parse_trips<R: Read>(source: R, opts: &ParseOptions) -> Result<ParsedTrips, IngestError> {
    if !opts.delimiter.is_ascii() {
        return Err(IngestError::Config(format!(
            "delimiter `{}` is not a single-byte character",
            opts.delimiter
        )));
    }
    let mut reader = ReaderBuilder::new()
        .delimiter(opts.delimiter as u8)
        .flexible(true)
        .has_headers(true)
        .from_reader(source);
    let header = reader.byte_headers()?.clone();
    let index = FieldIndex::resolve(&header, &opts.columns)?;
    let fast_timestamps = opts.timestamp_format == DEFAULT_TIMESTAMP_FORMAT;

    let mut out = ParsedTrips::default();
    let mut chunk: Vec<(u64, ByteRecord)> = Vec::with_capacity(CHUNK_ROWS);
    let mut row = 0u64;
    loop {
        let mut record = ByteRecord::new();
        let more = match reader.read_byte_record(&mut record) {
            Ok(more) => more,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => {
                row += 1;
                out.diagnostics.push(RowDiagnostic {
                    row,
                    trip_id: generated_id(opts, row),
                    severity: Severity::Error,
                    reason: format!("unreadable row: {e}"),
                });
                continue;
            }
        };
        if more {
            row += 1;
            chunk.push((row, record));
        }
        if chunk.len() == CHUNK_ROWS || (!more && !chunk.is_empty()) {
            let parsed: Vec<RowOutcome> = chunk
                .par_iter()
                .map(|(row, rec)| parse_row(*row, rec, &index, opts, fast_timestamps))
                .collect();
            for outcome in parsed {
                match outcome {
                    RowOutcome::Kept(trip, warning) => {
                        out.trips.push(trip);
                        out.diagnostics.extend(warning);
                    }
                    RowOutcome::Rejected(diag) => out.diagnostics.push(diag),
                }
            }
            chunk.clear();
        }
        if !more {
            break;
        }
    }
    out.rows_read = row;
    out.diagnostics.sort_by_key(|d| d.row);
    sort_trips(&mut out.trips);
    Ok(out)
}

enum RowOutcome {
    Kept(TripRecord, Option<RowDiagnostic>),
    Rejected(RowDiagnostic),
}

fn generated_id(opts: &ParseOptions, row: u64) -> String {
    format!("{}{}", opts.trip_id_prefix, row)
}

fn parse_row(
    row: u64,
    rec: &ByteRecord,
    index: &FieldIndex,
    opts: &ParseOptions,
    fast_timestamps: bool,
) -> RowOutcome {
    let trip_id = match index.trip_id.and_then(|i| rec.get(i)) {
        Some(raw) => String::from_utf8_lossy(raw.trim_ascii()).into_owned(),
        None => generated_id(opts, row),
    };
    let reject = |reason: String| RowDiagnostic {
        row,
        trip_id: trip_id.clone(),
        severity: Severity::Error,
        reason,
    };
    let field = |i: usize, name: &str| -> Result<&str, String> {
        let raw = rec
            .get(i)
            .ok_or_else(|| format!("row has {} fields, missing `{name}`", rec.len()))?;
        std::str::from_utf8(raw)
            .map(str::trim)
            .map_err(|_| format!("`{name}` is not valid UTF-8"))
    };
    let result = (|| -> Result<(TripRecord, Option<String>), String> {
        let time = |i: usize, name: &str| -> Result<NaiveDateTime, String> {
            let raw = field(i, name)?;
            let parsed = if fast_timestamps {
                parse_iso_seconds(raw)
            } else {
                NaiveDateTime::parse_from_str(raw, &opts.timestamp_format).ok()
            };
            parsed.ok_or_else(|| format!("unparseable {name} `{raw}`"))
        };
        let start_time = time(index.start_time, "start_time")?;
        let end_time = time(index.end_time, "end_time")?;
        let raw_duration = field(index.duration, "duration")?;
        let duration: u64 = raw_duration
            .parse()
            .map_err(|_| format!("unparseable duration `{raw_duration}`"))?;
        let duration = match opts.duration_unit {
            DurationUnit::Seconds => duration,
            DurationUnit::Milliseconds => duration / 1000,
        };
        if end_time < start_time {
            return Err(format!(
                "end_time {end_time} precedes start_time {start_time}"
            ));
        }
        let start_station = field(index.start_station, "start_station")?;
        let end_station = field(index.end_station, "end_station")?;
        if start_station.is_empty() || end_station.is_empty() {
            return Err("empty station id".into());
        }
        let elapsed = (end_time - start_time).num_seconds() as u64;
        let warning = (elapsed.abs_diff(duration) > opts.duration_tolerance_s).then(|| {
            format!("duration {duration} s differs from end - start = {elapsed} s; duration kept")
        });
        Ok((
            TripRecord {
                trip_id: trip_id.clone(),
                start_time,
                end_time,
                duration,
                start_station: StationId::from(start_station),
                end_station: StationId::from(end_station),
                bike_id: field(index.bike_id, "bike_id")?.to_owned(),
                member_type: MemberType::parse(field(index.member_type, "member_type")?),
            },
            warning,
        ))
    })();
    match result {
        Ok((trip, warning)) => {
            let warning = warning.map(|reason| RowDiagnostic {
                row,
                trip_id: trip.trip_id.clone(),
                severity: Severity::Warning,
                reason,
            });
            RowOutcome::Kept(trip, warning)
        }
        Err(reason) => RowOutcome::Rejected(reject(reason)),
    }
}

/// Fast path for `YYYY-MM-DD hh:mm:ss`.
fn parse_iso_seconds(s: &str) -> Option<NaiveDateTime> {
    let b = s.as_bytes();
    if b.len() != 19 || b[4] != b'-' || b[7] != b'-' || !(b[10] == b' ' || b[10] == b'T') {
        return None;
    }
    if b[13] != b':' || b[16] != b':' {
        return None;
    }
    let num = |r: std::ops::Range<usize>| -> Option<u32> {
        b[r].iter().try_fold(0u32, |acc, &c| {
            c.is_ascii_digit().then(|| acc * 10 + (c - b'0') as u32)
        })
    };
    let date = NaiveDate::from_ymd_opt(num(0..4)? as i32, num(5..7)?, num(8..10)?)?;
    date.and_hms_opt(num(11..13)?, num(14..16)?, num(17..19)?)
}

/// Writes trips with the header named by `opts.columns`, in the same field
/// formats [`parse_trips`] reads.
pub fn write_trips<W: Write>(
    sink: W,
    trips: &[TripRecord],
    opts: &ParseOptions,
) -> Result<(), IngestError> {
    let mut w = WriterBuilder::new()
        .delimiter(opts.delimiter as u8)
        .from_writer(sink);
    let c = &opts.columns;
    let mut header: Vec<&str> = Vec::with_capacity(8);
    if let Some(id) = &c.trip_id {
        header.push(id);
    }
    header.extend([
        c.duration.as_str(),
        &c.start_time,
        &c.end_time,
        &c.start_station,
        &c.end_station,
        &c.bike_id,
        &c.member_type,
    ]);
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(8);
    for t in trips {
        row.clear();
        if c.trip_id.is_some() {
            row.push(t.trip_id.clone());
        }
        let duration = match opts.duration_unit {
            DurationUnit::Seconds => t.duration,
            DurationUnit::Milliseconds => t.duration * 1000,
        };
        row.push(duration.to_string());
        row.push(t.start_time.format(&opts.timestamp_format).to_string());
        row.push(t.end_time.format(&opts.timestamp_format).to_string());
        row.push(t.start_station.to_string());
        row.push(t.end_station.to_string());
        row.push(t.bike_id.clone());
        row.push(t.member_type.label().to_owned());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
