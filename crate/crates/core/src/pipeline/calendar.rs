//! Calendar helpers. All conversions are in UTC.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::PipelineError;

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self, PipelineError> {
        if !(1..=12).contains(&month) {
            return Err(PipelineError::InvalidMonth(format!("{year}-{month}")));
        }
        Ok(YearMonth { year, month })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month
    }

    /// The month `n` months after this one (`n` may be negative).
    pub fn offset(self, n: i32) -> Self {
        let idx = self.year * 12 + (self.month as i32 - 1) + n;
        YearMonth {
            year: idx.div_euclid(12),
            month: idx.rem_euclid(12) as u32 + 1,
        }
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PipelineError::InvalidMonth(s.to_string());
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        YearMonth::new(y.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// ISO-8601 week-numbering year and week.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IsoWeek {
    pub year: i32,
    pub week: u32,
}

impl fmt::Display for IsoWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-W{:02}", self.year, self.week)
    }
}

fn utc(ts: i64) -> DateTime<chrono::Utc> {
    // Representable for every non-negative i64 second count chrono accepts;
    // anything beyond year 262143 is clamped to the epoch.
    DateTime::from_timestamp(ts, 0).unwrap_or_default()
}

/// Calendar month containing Unix second `ts`.
pub fn unix_to_month(ts: i64) -> YearMonth {
    let d = utc(ts);
    YearMonth {
        year: d.year(),
        month: d.month(),
    }
}

/// ISO week containing Unix second `ts`.
pub fn unix_to_week(ts: i64) -> IsoWeek {
    let w = utc(ts).iso_week();
    IsoWeek {
        year: w.year(),
        week: w.week(),
    }
}

/// Signed number of months from `y` to `x`.
pub fn months_between(x: YearMonth, y: YearMonth) -> i32 {
    12 * (x.year - y.year) + (x.month as i32 - y.month as i32)
}

/// Closed range of event months kept in the panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventWindow {
    pub lo: i32,
    pub hi: i32,
}

impl Default for EventWindow {
    fn default() -> Self {
        EventWindow { lo: -24, hi: 36 }
    }
}

impl EventWindow {
    pub fn contains(&self, e: i32) -> bool {
        (self.lo..=self.hi).contains(&e)
    }

    /// Three-month bin of event month `e`: `3·⌊e/3⌋`, flooring toward −∞.
    pub fn assign_bin(&self, e: i32) -> Result<i32, PipelineError> {
        if !self.contains(e) {
            return Err(PipelineError::OutOfWindow {
                e,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(3 * e.div_euclid(3))
    }
}

impl FromStr for EventWindow {
    type Err = PipelineError;

    /// Parses `LO:HI`, e.g. `-24:36`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PipelineError::InvalidWindow(s.to_string());
        let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
        let w = EventWindow {
            lo: lo.trim().parse().map_err(|_| bad())?,
            hi: hi.trim().parse().map_err(|_| bad())?,
        };
        if w.lo > w.hi {
            return Err(bad());
        }
        Ok(w)
    }
}

/// Bin of `e` under the default `[-24, 36]` window.
pub fn assign_bin(e: i32) -> Result<i32, PipelineError> {
    EventWindow::default().assign_bin(e)
}
