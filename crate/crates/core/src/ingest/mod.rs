//! Trip-file parsing, cleaning, station exclusion and quarter partitioning.

mod catalog;
mod clean;
mod parse;
mod partition;
mod record;

use thiserror::Error;

pub use catalog::StationCatalog;
pub use clean::{
    clean_trips, filter_low_activity_stations, removal_reason, CleaningReport, CleaningRules,
    LowActivityExclusions, Removal, RemovalReason,
};
pub use parse::{
    parse_trips, sort_trips, write_trips, ColumnMap, DurationUnit, ParseOptions, ParsedTrips,
    RowDiagnostic, Severity, DEFAULT_TIMESTAMP_FORMAT,
};
pub use partition::{partition_events, QuarterEvents};
pub use record::{DayType, Event, EventKind, MemberType, StationId, StationInfo, TripRecord};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("column `{column}` for field {field} not found in header")]
    MissingColumn { field: &'static str, column: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("station catalog: {0}")]
    Catalog(String),
    #[error("cannot read {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<std::io::Error> for IngestError {
    fn from(source: std::io::Error) -> Self {
        IngestError::Io {
            path: "<stream>".into(),
            source,
        }
    }
}
