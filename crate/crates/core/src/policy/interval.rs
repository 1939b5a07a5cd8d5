//! Protection intervals: an optional inclusive date span, an optional daily
//! clock window (which may wrap midnight), or "anytime".
//!
//! Timestamps are civil local times of the photo; zone handling is up to the
//! caller.

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

/// Inclusive calendar-date span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }
}

/// Inclusive recurring clock window. `start > end` wraps past midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DailyWindow {
    pub start: NaiveTime,
    pub end: NaiveTime,
}

impl DailyWindow {
    pub fn wraps(&self) -> bool {
        self.start > self.end
    }

    pub fn contains(&self, t: NaiveTime) -> bool {
        if self.wraps() {
            t >= self.start || t <= self.end
        } else {
            self.start <= t && t <= self.end
        }
    }

    /// The clock times outside this window, as a window of its own.
    ///
    /// Endpoints are shared with `self` (both windows are inclusive).
    pub fn complement(&self) -> DailyWindow {
        DailyWindow { start: self.end, end: self.start }
    }
}

/// When a policy applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "IntervalDocument", into = "IntervalDocument")]
pub struct TimeInterval {
    pub date_range: Option<DateRange>,
    pub daily_window: Option<DailyWindow>,
    pub anytime: bool,
}

impl TimeInterval {
    pub const ANYTIME: TimeInterval = TimeInterval { date_range: None, daily_window: None, anytime: true };

    pub fn dates(start: NaiveDate, end: NaiveDate) -> Self {
        TimeInterval { date_range: Some(DateRange { start, end }), daily_window: None, anytime: false }
    }

    pub fn daily(start: NaiveTime, end: NaiveTime) -> Self {
        TimeInterval { date_range: None, daily_window: Some(DailyWindow { start, end }), anytime: false }
    }

    pub fn with_window(mut self, start: NaiveTime, end: NaiveTime) -> Self {
        self.daily_window = Some(DailyWindow { start, end });
        self.anytime = false;
        self
    }

    /// `anytime` excludes both constraints; otherwise at least one is
    /// present and any date span is ordered.
    pub fn is_valid(&self) -> bool {
        if self.anytime {
            return self.date_range.is_none() && self.daily_window.is_none();
        }
        if self.date_range.is_none() && self.daily_window.is_none() {
            return false;
        }
        self.date_range.is_none_or(|r| r.start <= r.end)
    }

    pub fn contains(&self, t: NaiveDateTime) -> bool {
        if self.anytime {
            return true;
        }
        self.date_range.is_none_or(|r| r.contains(t.date())) && self.daily_window.is_none_or(|w| w.contains(t.time()))
    }
}

/// Free-function form of [`TimeInterval::contains`].
pub fn interval_contains(int: &TimeInterval, t: NaiveDateTime) -> bool {
    int.contains(t)
}

/// Wire form: `{"anytime": true}` or any of
/// `date_start`/`date_end` (`YYYY-MM-DD`) and `time_start`/`time_end` (`HH:MM[:SS]`).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IntervalDocument {
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub anytime: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_start: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub date_end: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_start: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_end: Option<String>,
}

fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("bad date {s:?}: {e}"))
}

fn parse_time(s: &str) -> Result<NaiveTime, String> {
    let s = s.trim();
    NaiveTime::parse_from_str(s, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M"))
        .map_err(|e| format!("bad clock time {s:?}: {e}"))
}

fn pair<T>(a: &Option<String>, b: &Option<String>, what: &str, parse: fn(&str) -> Result<T, String>) -> Result<Option<(T, T)>, String> {
    match (a, b) {
        (None, None) => Ok(None),
        (Some(a), Some(b)) => Ok(Some((parse(a)?, parse(b)?))),
        _ => Err(format!("{what} needs both a start and an end")),
    }
}

impl IntervalDocument {
    /// Parse field syntax. Combination rules are left to [`TimeInterval::is_valid`].
    pub fn parse(&self) -> Result<TimeInterval, String> {
        let dates = pair(&self.date_start, &self.date_end, "date range", parse_date)?;
        let window = pair(&self.time_start, &self.time_end, "daily window", parse_time)?;
        Ok(TimeInterval {
            date_range: dates.map(|(start, end)| DateRange { start, end }),
            daily_window: window.map(|(start, end)| DailyWindow { start, end }),
            anytime: self.anytime,
        })
    }
}

impl TryFrom<IntervalDocument> for TimeInterval {
    type Error = String;

    fn try_from(doc: IntervalDocument) -> Result<Self, Self::Error> {
        let int = doc.parse()?;
        if int.is_valid() {
            Ok(int)
        } else {
            Err("interval must be anytime or carry a date range and/or daily window".into())
        }
    }
}

impl From<TimeInterval> for IntervalDocument {
    fn from(int: TimeInterval) -> Self {
        let time = |t: NaiveTime| t.format("%H:%M:%S").to_string();
        IntervalDocument {
            anytime: int.anytime,
            date_start: int.date_range.map(|r| r.start.to_string()),
            date_end: int.date_range.map(|r| r.end.to_string()),
            time_start: int.daily_window.map(|w| time(w.start)),
            time_end: int.daily_window.map(|w| time(w.end)),
        }
    }
}
