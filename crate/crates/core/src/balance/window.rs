use chrono::NaiveTime;
use serde::{Deserialize, Serialize};

use super::BalanceError;

/// A time-of-day interval, inclusive at both ends, applied to every date.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceWindow {
    pub label: String,
    pub start: NaiveTime,
    pub end: NaiveTime,
}

impl BalanceWindow {
    pub fn new(
        label: impl Into<String>,
        start: NaiveTime,
        end: NaiveTime,
    ) -> Result<Self, BalanceError> {
        let label = label.into();
        if start > end {
            return Err(BalanceError::InvalidWindow(format!(
                "{label}: start {start} is after end {end}"
            )));
        }
        Ok(Self { label, start, end })
    }

    pub fn contains(&self, t: NaiveTime) -> bool {
        self.start <= t && t <= self.end
    }

    fn hms(label: &str, (h1, m1, s1): (u32, u32, u32), (h2, m2, s2): (u32, u32, u32)) -> Self {
        Self {
            label: label.into(),
            start: NaiveTime::from_hms_opt(h1, m1, s1).expect("valid time"),
            end: NaiveTime::from_hms_opt(h2, m2, s2).expect("valid time"),
        }
    }
}

/// Full day, morning peak, afternoon peak and midday off-peak.
pub fn standard_windows() -> Vec<BalanceWindow> {
    vec![
        BalanceWindow::hms("full_day", (0, 0, 0), (23, 59, 59)),
        BalanceWindow::hms("morning", (6, 0, 0), (10, 59, 59)),
        BalanceWindow::hms("afternoon", (16, 0, 0), (19, 59, 59)),
        BalanceWindow::hms("midday", (12, 0, 0), (15, 59, 59)),
    ]
}
