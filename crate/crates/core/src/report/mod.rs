//! Map-ready GeoJSON, CSV tables and JSON summaries.
//!
//! All reals are written with six decimals (or rounded to six decimals before
//! JSON serialization), and every collection is ordered by station id or
//! cluster/category index, so exports are byte-identical for identical inputs.

mod geojson;
mod palette;
mod summary;
mod tables;

use thiserror::Error;

pub use geojson::{export_balance_geojson, export_cluster_geojson, StyledCollection};
pub use palette::{
    category_color, cluster_color, PaletteColor, CATEGORY_PALETTE, CLUSTER_PALETTE,
    SELF_BALANCED_COLOR,
};
pub use summary::{
    balance_summary, quarter_summary, BalanceSummary, QuarterSummary, WindowSummary,
};
pub use tables::{
    center_profiles, read_center_profiles_csv, write_center_profiles_csv, write_cluster_sizes_csv,
    CenterProfileRow,
};

/// Version tag carried by every JSON document this crate writes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cluster model has no assigned stations")]
    EmptyModel,
    #[error("balance indices span several windows ({0}); export one window at a time")]
    MixedWindows(String),
    #[error("no balance indices to export")]
    EmptyIndices,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed table: {0}")]
    Table(String),
}

/// Rounds to six decimals, the precision of every exported real.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}
