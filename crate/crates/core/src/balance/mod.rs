//! Daily maximum shortage/excess, their quarter averages (ADMS/ADME) and
//! severity categories.

mod extremes;
mod index;
mod window;

use thiserror::Error;

pub use extremes::{day_extremes, scan_extremes, DayExtremes, Extremes};
pub use index::{
    adms_adme, compute_balance, read_balance_csv, self_balanced_fraction, write_balance_csv,
    BalanceIndex, CategoryMode, CategoryScheme,
};
pub use window::{standard_windows, BalanceWindow};

#[derive(Debug, Error)]
pub enum BalanceError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("quarter has no dates")]
    EmptyQuarter,
    #[error("no balance indices to summarize")]
    EmptySet,
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("unknown categorization mode `{0}` (expected adme_only, adms_only or combined)")]
    UnknownMode(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed balance table: {0}")]
    Table(String),
}
