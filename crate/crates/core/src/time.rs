//! UTC instants and half-open intervals.

use std::fmt;

use chrono::{DateTime, Duration, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Timestamp = DateTime<Utc>;

pub const MILLIS_PER_MINUTE: i64 = 60_000;
pub const MINUTES_PER_WEEK: i64 = 10_080;

/// Canonical text form: `2008-08-03T08:38:00.000Z`.
pub fn format_ts(ts: &Timestamp) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Parses an RFC 3339 / ISO 8601 instant that must carry a zero UTC offset.
pub fn parse_ts(s: &str) -> Result<Timestamp> {
    let parsed = DateTime::parse_from_rfc3339(s)
        .map_err(|e| Error::format("timestamp", format!("{s:?}: {e}")))?;
    if parsed.offset().local_minus_utc() != 0 {
        return Err(Error::format("timestamp", format!("{s:?}: offset is not UTC")));
    }
    Ok(parsed.with_timezone(&Utc))
}

pub fn from_millis(ms: i64) -> Result<Timestamp> {
    Utc.timestamp_millis_opt(ms)
        .single()
        .ok_or_else(|| Error::format("timestamp", format!("{ms} ms is out of range")))
}

/// Half-open UTC interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TimeSpan {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl TimeSpan {
    pub fn new(start: Timestamp, end: Timestamp) -> Result<Self> {
        if end < start {
            return Err(Error::Geometry(format!(
                "interval end {} precedes start {}",
                format_ts(&end),
                format_ts(&start)
            )));
        }
        Ok(TimeSpan { start, end })
    }

    /// `[start, start + minutes)`.
    pub fn from_minutes(start: Timestamp, minutes: i64) -> Result<Self> {
        TimeSpan::new(start, start + Duration::minutes(minutes))
    }

    pub fn duration(&self) -> Duration {
        self.end - self.start
    }

    pub fn len_millis(&self) -> i64 {
        self.duration().num_milliseconds()
    }

    pub fn contains(&self, ts: &Timestamp) -> bool {
        self.start <= *ts && *ts < self.end
    }

    pub fn covers(&self, other: &TimeSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

impl fmt::Display for TimeSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", format_ts(&self.start), format_ts(&self.end))
    }
}

#[derive(Serialize, Deserialize)]
struct SpanRepr {
    start: String,
    end: String,
}

impl Serialize for TimeSpan {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SpanRepr {
            start: format_ts(&self.start),
            end: format_ts(&self.end),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TimeSpan {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SpanRepr::deserialize(d)?;
        let start = parse_ts(&repr.start).map_err(D::Error::custom)?;
        let end = parse_ts(&repr.end).map_err(D::Error::custom)?;
        TimeSpan::new(start, end).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        let ts = parse_ts("2008-08-03T08:38:00.000Z").unwrap();
        assert_eq!(format_ts(&ts), "2008-08-03T08:38:00.000Z");
        assert_eq!(parse_ts("2008-08-03T08:38:00Z").unwrap(), ts);
        assert_eq!(parse_ts("2008-08-03T08:38:00+00:00").unwrap(), ts);
    }

    #[test]
    fn rejects_non_utc_offset() {
        assert!(parse_ts("2008-08-03T08:38:00.000+02:00").is_err());
        assert!(parse_ts("yesterday").is_err());
    }

    #[test]
    fn half_open() {
        let t0 = parse_ts("2008-08-03T00:00:00Z").unwrap();
        let span = TimeSpan::from_minutes(t0, 10).unwrap();
        assert!(span.contains(&t0));
        assert!(!span.contains(&span.end));
        assert_eq!(span.len_millis(), 10 * MILLIS_PER_MINUTE);
    }
}
