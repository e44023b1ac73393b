//! Tick events, the tick CSV format, and pair selection.
//!
//! A tick file holds one event per line:
//!
//! ```text
//! timestamp,pair,kind
//! 2008-08-03T08:38:00.000Z,EUR/USD,Q
//! 2008-08-03T08:38:00.412Z,EUR/USD,T
//! ```
//!
//! The header is optional and recognised by a leading non-digit. `kind` is
//! `Q` (quote) or `T` (trade). Columns past the third are ignored. Lines
//! that fail to parse are collected into a reject report; the whole parse
//! fails once more than 1% of data lines are rejects.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::time::{format_ts, parse_ts, TimeSpan, Timestamp};

/// Maximum fraction of rejected data lines tolerated by the parser.
pub const REJECT_BUDGET: f64 = 0.01;

/// Currency pair code of the form `AAA/BBB`, stored inline.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair([u8; 7]);

impl Pair {
    pub fn as_str(&self) -> &str {
        // Construction only admits ASCII.
        std::str::from_utf8(&self.0).expect("pair codes are ASCII")
    }

    pub fn as_bytes(&self) -> &[u8; 7] {
        &self.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let invalid = || Error::InvalidPair(String::from_utf8_lossy(bytes).into_owned());
        let code: [u8; 7] = bytes.try_into().map_err(|_| invalid())?;
        let ok = code[3] == b'/'
            && code[..3]
                .iter()
                .chain(&code[4..])
                .all(|b| b.is_ascii_uppercase() || b.is_ascii_digit());
        if ok {
            Ok(Pair(code))
        } else {
            Err(invalid())
        }
    }
}

impl FromStr for Pair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pair::from_bytes(s.as_bytes())
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pair({})", self.as_str())
    }
}

impl Serialize for Pair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Pair {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Quote (order) or trade (deal) event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Quote,
    Trade,
}

impl EventKind {
    pub fn code(self) -> char {
        match self {
            EventKind::Quote => 'Q',
            EventKind::Trade => 'T',
        }
    }

    /// Short label used in report columns: `P` for quotes, `D` for trades.
    pub fn series_label(self) -> &'static str {
        match self {
            EventKind::Quote => "P",
            EventKind::Trade => "D",
        }
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Q" | "q" | "quote" => Ok(EventKind::Quote),
            "T" | "t" | "trade" => Ok(EventKind::Trade),
            other => Err(Error::format("event kind", format!("{other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TickEvent {
    pub timestamp: Timestamp,
    pub pair: Pair,
    pub kind: EventKind,
}

impl TickEvent {
    pub fn new(timestamp: Timestamp, pair: Pair, kind: EventKind) -> Self {
        TickEvent {
            timestamp,
            pair,
            kind,
        }
    }
}

/// How the parser treats timestamps that go backwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderPolicy {
    /// Input must already be non-decreasing in time.
    #[default]
    Strict,
    /// Events are stably sorted by timestamp after parsing.
    SortLenient,
}

/// One rejected input line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub line_number: usize,
    pub reason: String,
}

/// Time-ordered, immutable event sequence with its covering span.
#[derive(Debug, Clone, PartialEq)]
pub struct TickStream {
    events: Vec<TickEvent>,
    span: TimeSpan,
    pair_universe: BTreeSet<Pair>,
    header: Option<String>,
    rejects: Vec<Reject>,
}

impl TickStream {
    /// Builds a stream, checking ordering and span containment.
    pub fn new(events: Vec<TickEvent>, span: TimeSpan) -> Result<Self> {
        if let Some(pos) = events
            .windows(2)
            .position(|w| w[1].timestamp < w[0].timestamp)
        {
            return Err(Error::Ordering {
                line: pos + 2,
                previous: format_ts(&events[pos].timestamp),
                found: format_ts(&events[pos + 1].timestamp),
            });
        }
        if let (Some(first), Some(last)) = (events.first(), events.last()) {
            if !span.contains(&first.timestamp) || !span.contains(&last.timestamp) {
                return Err(Error::Coverage {
                    window: format!(
                        "[{}, {}]",
                        format_ts(&first.timestamp),
                        format_ts(&last.timestamp)
                    ),
                    span: span.to_string(),
                });
            }
        }
        let pair_universe = events.iter().map(|e| e.pair).collect();
        Ok(TickStream {
            events,
            span,
            pair_universe,
            header: None,
            rejects: Vec::new(),
        })
    }

    /// Stream whose span is the tightest half-open interval around its
    /// events, `[first, last + 1 ms)`.
    pub fn from_sorted(events: Vec<TickEvent>) -> Result<Self> {
        let (first, last) = match (events.first(), events.last()) {
            (Some(f), Some(l)) => (f.timestamp, l.timestamp),
            _ => return Err(Error::EmptyStream),
        };
        let span = TimeSpan::new(first, last + chrono::Duration::milliseconds(1))?;
        TickStream::new(events, span)
    }

    pub fn events(&self) -> &[TickEvent] {
        &self.events
    }

    pub fn span(&self) -> TimeSpan {
        self.span
    }

    pub fn pair_universe(&self) -> &BTreeSet<Pair> {
        &self.pair_universe
    }

    pub fn header(&self) -> Option<&str> {
        self.header.as_deref()
    }

    /// Lines dropped during parsing (always within the reject budget).
    pub fn rejects(&self) -> &[Reject] {
        &self.rejects
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Same events, declared over a wider span.
    pub fn with_span(mut self, span: TimeSpan) -> Result<Self> {
        if !span.covers(&self.span) {
            return Err(Error::Coverage {
                window: self.span.to_string(),
                span: span.to_string(),
            });
        }
        self.span = span;
        Ok(self)
    }

    pub fn with_header(mut self, header: impl Into<String>) -> Self {
        self.header = Some(header.into());
        self
    }

    /// Events whose timestamps fall in `window`.
    pub fn slice(&self, window: &TimeSpan) -> &[TickEvent] {
        let lo = self.events.partition_point(|e| e.timestamp < window.start);
        let hi = self.events.partition_point(|e| e.timestamp < window.end);
        &self.events[lo..hi]
    }

    /// Writes the stream in tick CSV form, header first when present.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        if let Some(h) = &self.header {
            writeln!(out, "{h}")?;
        }
        for e in &self.events {
            writeln!(
                out,
                "{},{},{}",
                format_ts(&e.timestamp),
                e.pair,
                e.kind.code()
            )?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::with_capacity(self.events.len() * 32);
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("tick CSV is ASCII")
    }
}

fn parse_line(line: &str) -> std::result::Result<TickEvent, String> {
    let mut fields = line.split(',');
    let (ts, pair, kind) = match (fields.next(), fields.next(), fields.next()) {
        (Some(t), Some(p), Some(k)) => (t.trim(), p.trim(), k.trim()),
        _ => return Err("expected at least 3 comma-separated fields".into()),
    };
    let timestamp = parse_ts(ts).map_err(|e| e.to_string())?;
    let pair = pair.parse::<Pair>().map_err(|e| e.to_string())?;
    let kind = match kind {
        "Q" => EventKind::Quote,
        "T" => EventKind::Trade,
        other => return Err(format!("unknown event kind {other:?}")),
    };
    Ok(TickEvent::new(timestamp, pair, kind))
}

/// Reads a whole tick file from `source` and parses it.
pub fn parse_tick_file<R: Read>(mut source: R, policy: OrderPolicy) -> Result<TickStream> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    parse_tick_str(&text, policy)
}

/// Parses tick CSV text. Line parsing runs in parallel; ordering checks and
/// reject accounting are sequential, so the result equals a serial parse.
pub fn parse_tick_str(text: &str, policy: OrderPolicy) -> Result<TickStream> {
    let mut lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
        .collect();

    let mut header = None;
    if let Some(&(_, first)) = lines.first() {
        if !first.trim_start().starts_with(|c: char| c.is_ascii_digit()) {
            header = Some(first.to_string());
            lines.remove(0);
        }
    }

    let parsed: Vec<(usize, std::result::Result<TickEvent, String>)> = lines
        .par_iter()
        .map(|&(n, l)| (n, parse_line(l)))
        .collect();

    let total = parsed.len();
    let mut events = Vec::with_capacity(total);
    let mut rejects = Vec::new();
    for (line_number, res) in parsed {
        match res {
            Ok(ev) => {
                if policy == OrderPolicy::Strict {
                    if let Some(prev) = events.last() {
                        let prev: &TickEvent = prev;
                        if ev.timestamp < prev.timestamp {
                            return Err(Error::Ordering {
                                line: line_number,
                                previous: format_ts(&prev.timestamp),
                                found: format_ts(&ev.timestamp),
                            });
                        }
                    }
                }
                events.push(ev);
            }
            Err(reason) => rejects.push(Reject {
                line_number,
                reason,
            }),
        }
    }

    if !rejects.is_empty() && rejects.len() as f64 > REJECT_BUDGET * total as f64 {
        return Err(Error::TooManyRejects {
            rejected: rejects.len(),
            total,
            rejects,
        });
    }
    if events.is_empty() {
        return Err(Error::EmptyStream);
    }
    if policy == OrderPolicy::SortLenient {
        events.sort_by_key(|e| e.timestamp);
    }

    let mut stream = TickStream::from_sorted(events)?;
    stream.header = header;
    stream.rejects = rejects;
    Ok(stream)
}

/// Serializes a reject report as a JSON array of `{line_number, reason}`.
pub fn rejects_to_json(rejects: &[Reject]) -> Result<String> {
    Ok(serde_json::to_string_pretty(rejects)?)
}

/// Keeps only the events whose pair is in `include`; order and span are
/// preserved.
pub fn filter_pairs(stream: &TickStream, include: &BTreeSet<Pair>) -> Result<TickStream> {
    if include.is_empty() || include.is_disjoint(&stream.pair_universe) {
        return Err(Error::EmptySelection);
    }
    let keep: HashSet<Pair> = include.iter().copied().collect();
    let events: Vec<TickEvent> = stream
        .events
        .iter()
        .filter(|e| keep.contains(&e.pair))
        .copied()
        .collect();
    let pair_universe = stream
        .pair_universe
        .intersection(include)
        .copied()
        .collect();
    Ok(TickStream {
        events,
        span: stream.span,
        pair_universe,
        header: stream.header.clone(),
        rejects: stream.rejects.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(s: &str) -> Pair {
        s.parse().unwrap()
    }

    #[test]
    fn pair_validation() {
        assert!("EUR/USD".parse::<Pair>().is_ok());
        assert!("BKT/RUB".parse::<Pair>().is_ok());
        assert!("XA1/USD".parse::<Pair>().is_ok());
        for bad in ["eur/usd", "EURUSD", "EUR-USD", "EUR/USDX", "EU/USD", ""] {
            assert!(bad.parse::<Pair>().is_err(), "{bad} should be rejected");
        }
    }

    #[test]
    fn parses_single_record() {
        let s = parse_tick_str("2008-08-03T08:38:00.000Z,EUR/USD,Q\n", OrderPolicy::Strict).unwrap();
        assert_eq!(s.len(), 1);
        let e = s.events()[0];
        assert_eq!(e.pair, pair("EUR/USD"));
        assert_eq!(e.kind, EventKind::Quote);
        assert_eq!(format_ts(&e.timestamp), "2008-08-03T08:38:00.000Z");
        assert!(s.header().is_none());
    }

    #[test]
    fn strict_ordering_names_line() {
        let text = "2008-08-03T08:38:01.000Z,EUR/USD,Q\n2008-08-03T08:38:00.000Z,EUR/USD,Q\n";
        match parse_tick_str(text, OrderPolicy::Strict) {
            Err(Error::Ordering { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ordering error, got {other:?}"),
        }
        let lenient = parse_tick_str(text, OrderPolicy::SortLenient).unwrap();
        assert_eq!(lenient.len(), 2);
        assert!(lenient.events()[0].timestamp < lenient.events()[1].timestamp);
    }

    #[test]
    fn ordering_line_counts_header() {
        let text = "timestamp,pair,kind\n2008-08-03T08:38:01.000Z,EUR/USD,Q\n2008-08-03T08:38:00.000Z,EUR/USD,Q\n";
        match parse_tick_str(text, OrderPolicy::Strict) {
            Err(Error::Ordering { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected ordering error, got {other:?}"),
        }
    }

    #[test]
    fn header_detected_and_extra_columns_ignored() {
        let text = "timestamp,pair,kind\n2008-08-03T08:38:00.000Z,USD/JPY,T,BID,109.2\n";
        let s = parse_tick_str(text, OrderPolicy::Strict).unwrap();
        assert_eq!(s.header(), Some("timestamp,pair,kind"));
        assert_eq!(s.events()[0].kind, EventKind::Trade);
    }

    #[test]
    fn duplicate_timestamps_are_kept() {
        let text = "2008-08-03T08:38:00.000Z,EUR/USD,Q\n2008-08-03T08:38:00.000Z,EUR/USD,Q\n";
        assert_eq!(parse_tick_str(text, OrderPolicy::Strict).unwrap().len(), 2);
    }

    #[test]
    fn empty_input() {
        assert!(matches!(parse_tick_str("", OrderPolicy::Strict), Err(Error::EmptyStream)));
        assert!(matches!(
            parse_tick_str("timestamp,pair,kind\n", OrderPolicy::Strict),
            Err(Error::EmptyStream)
        ));
    }

    fn lines_with_rejects(good: usize, bad: usize) -> String {
        let mut s = String::new();
        for i in 0..good {
            s.push_str(&format!("2008-08-03T08:{:02}:00.000Z,EUR/USD,Q\n", i % 60));
        }
        for _ in 0..bad {
            s.push_str("2008-08-03T09:00:00.000Z,EUR/USD,X\n");
        }
        s
    }

    #[test]
    fn reject_budget() {
        // 1 in 200 = 0.5%: tolerated, reported.
        let s = parse_tick_str(&lines_with_rejects(199, 1), OrderPolicy::SortLenient).unwrap();
        assert_eq!(s.rejects().len(), 1);
        assert_eq!(s.rejects()[0].line_number, 200);
        assert!(s.rejects()[0].reason.contains("kind"));
        let json = rejects_to_json(s.rejects()).unwrap();
        assert!(json.contains("\"line_number\": 200"));

        // 3 in 200 = 1.5%: hard failure.
        match parse_tick_str(&lines_with_rejects(197, 3), OrderPolicy::SortLenient) {
            Err(Error::TooManyRejects { rejected, total, .. }) => {
                assert_eq!((rejected, total), (3, 200))
            }
            other => panic!("expected reject-budget error, got {other:?}"),
        }
    }

    #[test]
    fn bad_timestamp_is_rejected_not_fatal() {
        let mut text = lines_with_rejects(150, 0);
        text.push_str("2008-13-40T00:00:00Z,EUR/USD,Q\n");
        let s = parse_tick_str(&text, OrderPolicy::SortLenient).unwrap();
        assert_eq!(s.rejects().len(), 1);
        assert!(s.rejects()[0].reason.contains("timestamp"));
    }

    #[test]
    fn filter_selects_and_preserves_span() {
        let text = "2008-08-03T08:38:00.000Z,EUR/USD,Q\n2008-08-03T08:38:01.000Z,USD/JPY,Q\n2008-08-03T08:38:02.000Z,EUR/USD,T\n";
        let s = parse_tick_str(text, OrderPolicy::Strict).unwrap();
        let only: BTreeSet<Pair> = [pair("EUR/USD")].into();
        let f = filter_pairs(&s, &only).unwrap();
        assert_eq!(f.len(), 2);
        assert!(f.events().iter().all(|e| e.pair == pair("EUR/USD")));
        assert_eq!(f.span(), s.span());

        let all = s.pair_universe().clone();
        assert_eq!(filter_pairs(&s, &all).unwrap(), s);

        let none: BTreeSet<Pair> = [pair("GBP/USD")].into();
        assert!(matches!(filter_pairs(&s, &none), Err(Error::EmptySelection)));
        assert!(matches!(filter_pairs(&s, &BTreeSet::new()), Err(Error::EmptySelection)));
    }

    #[test]
    fn widen_span() {
        let s = parse_tick_str("2008-08-03T08:38:00.000Z,EUR/USD,Q\n", OrderPolicy::Strict).unwrap();
        let wide = TimeSpan::new(
            parse_ts("2008-08-03T00:00:00Z").unwrap(),
            parse_ts("2008-08-04T00:00:00Z").unwrap(),
        )
        .unwrap();
        assert_eq!(s.clone().with_span(wide).unwrap().span(), wide);
        let narrow = TimeSpan::new(wide.start, wide.start).unwrap();
        assert!(s.with_span(narrow).is_err());
    }
}
