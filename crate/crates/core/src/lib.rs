//! Station-level analysis of docked bike-share trip histories.
//!
//! The pipeline cleans raw trip records, turns each station's pickups and
//! drop-offs into normalized hourly weekday/weekend profiles, clusters those
//! profiles with K-means (validated by Davies-Bouldin, silhouette and Dunn
//! indices), and scores every station by its average daily maximum shortage
//! and excess over time-of-day windows. Results export as GeoJSON, CSV and
//! JSON.

pub mod balance;
pub mod calendar;
pub mod cluster;
pub mod ingest;
pub mod pipeline;
pub mod profiles;
pub mod report;
pub mod synth;

pub use calendar::{DateSpan, Quarter};
