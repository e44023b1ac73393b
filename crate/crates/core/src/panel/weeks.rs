//! Partitioning a span into whole 10,080-minute weeks.

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveTime, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{format_ts, TimeSpan, Timestamp, MINUTES_PER_WEEK};

/// Weekday and UTC time at which each analysis week opens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeekAnchor {
    pub weekday: Weekday,
    pub time: NaiveTime,
}

impl Default for WeekAnchor {
    /// Sunday 00:00 UTC.
    fn default() -> Self {
        WeekAnchor {
            weekday: Weekday::Sun,
            time: NaiveTime::MIN,
        }
    }
}

impl WeekAnchor {
    /// First anchor instant at or after `t`.
    pub fn first_at_or_after(&self, t: Timestamp) -> Timestamp {
        let date = t.date_naive();
        let ahead = (7 + self.weekday.num_days_from_monday() as i64
            - date.weekday().num_days_from_monday() as i64)
            % 7;
        let candidate = (date + Duration::days(ahead)).and_time(self.time).and_utc();
        if candidate < t {
            candidate + Duration::days(7)
        } else {
            candidate
        }
    }
}

/// Accepts `sun`, `Sunday`, `sun@22:00`.
impl FromStr for WeekAnchor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (day, time) = match s.split_once('@') {
            Some((d, t)) => (d, Some(t)),
            None => (s, None),
        };
        let weekday = day
            .trim()
            .parse::<Weekday>()
            .map_err(|_| Error::Config(format!("unknown weekday in anchor {s:?}")))?;
        let time = match time {
            Some(t) => NaiveTime::parse_from_str(t.trim(), "%H:%M")
                .map_err(|_| Error::Config(format!("anchor time must be HH:MM, got {t:?}")))?,
            None => NaiveTime::MIN,
        };
        Ok(WeekAnchor { weekday, time })
    }
}

impl fmt::Display for WeekAnchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.weekday, self.time.format("%H:%M"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedWindow {
    /// Start date of the window, `YYYY-MM-DD`.
    pub label: String,
    pub window: TimeSpan,
}

/// Disjoint, ordered, equal-length analysis windows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub windows: Vec<PlannedWindow>,
}

impl WindowPlan {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    /// A single explicit window, bypassing the weekly anchor.
    pub fn single(label: impl Into<String>, window: TimeSpan) -> Self {
        WindowPlan {
            windows: vec![PlannedWindow {
                label: label.into(),
                window,
            }],
        }
    }
}

/// Maximal run of whole weeks starting at successive anchors inside `span`.
/// Partial leading and trailing weeks are left out.
pub fn plan_weeks(span: TimeSpan, anchor: WeekAnchor) -> Result<WindowPlan> {
    let week = Duration::minutes(MINUTES_PER_WEEK);
    let mut start = anchor.first_at_or_after(span.start);
    let mut windows = Vec::new();
    while start + week <= span.end {
        windows.push(PlannedWindow {
            label: start.format("%Y-%m-%d").to_string(),
            window: TimeSpan {
                start,
                end: start + week,
            },
        });
        start += week;
    }
    if windows.is_empty() {
        return Err(Error::EmptyPlan {
            start: format_ts(&span.start),
            end: format_ts(&span.end),
        });
    }
    Ok(WindowPlan { windows })
}
