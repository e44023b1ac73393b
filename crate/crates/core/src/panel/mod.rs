//! Count panels: events per pair per bin of width Δt.
//!
//! An [`ActivityPanel`] is an N × Q matrix of non-negative integer counts for
//! one event kind. Row `j` belongs to `pairs[j]`; column `k` covers
//! `[t0 + kΔt, t0 + (k+1)Δt)`.

mod format;
mod weeks;

use std::collections::HashMap;

use chrono::Duration;

pub use format::{read_panel_binary, read_panel_csv, write_panel_binary, write_panel_csv, PanelMeta, BINARY_MAGIC};
pub use weeks::{plan_weeks, PlannedWindow, WeekAnchor, WindowPlan};

use crate::error::{Error, Result};
use crate::tickdata::{EventKind, Pair, TickStream};
use crate::time::{TimeSpan, MILLIS_PER_MINUTE};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActivityPanel {
    kind: EventKind,
    dt_minutes: u32,
    window: TimeSpan,
    pairs: Vec<Pair>,
    q: usize,
    /// Row-major, `pairs.len() * q`.
    counts: Vec<u64>,
}

/// Number of bins of width `dt_minutes` in `window`, or a geometry error
/// when the window is not an exact multiple of the bin width or holds
/// fewer than two bins.
pub fn bin_count(window: &TimeSpan, dt_minutes: u32) -> Result<usize> {
    if dt_minutes == 0 {
        return Err(Error::Geometry("bin width must be at least 1 minute".into()));
    }
    let width = i64::from(dt_minutes) * MILLIS_PER_MINUTE;
    let len = window.len_millis();
    if len % width != 0 {
        return Err(Error::Geometry(format!(
            "window {window} is not a multiple of {dt_minutes} min"
        )));
    }
    let q = (len / width) as usize;
    if q < 2 {
        return Err(Error::Geometry(format!(
            "window {window} holds {q} bin(s) of {dt_minutes} min; need at least 2"
        )));
    }
    Ok(q)
}

impl ActivityPanel {
    /// Builds a panel from per-pair rows, validating geometry.
    pub fn from_rows(
        kind: EventKind,
        dt_minutes: u32,
        window: TimeSpan,
        pairs: Vec<Pair>,
        rows: Vec<Vec<u64>>,
    ) -> Result<Self> {
        let q = bin_count(&window, dt_minutes)?;
        if pairs.is_empty() {
            return Err(Error::Geometry("panel needs at least one pair".into()));
        }
        if rows.len() != pairs.len() {
            return Err(Error::Geometry(format!(
                "{} rows for {} pairs",
                rows.len(),
                pairs.len()
            )));
        }
        check_distinct(&pairs)?;
        let mut counts = Vec::with_capacity(pairs.len() * q);
        for (pair, row) in pairs.iter().zip(&rows) {
            if row.len() != q {
                return Err(Error::Geometry(format!(
                    "row {pair} has {} bins, window implies {q}",
                    row.len()
                )));
            }
            counts.extend_from_slice(row);
        }
        Ok(ActivityPanel {
            kind,
            dt_minutes,
            window,
            pairs,
            q,
            counts,
        })
    }

    pub fn kind(&self) -> EventKind {
        self.kind
    }

    pub fn dt_minutes(&self) -> u32 {
        self.dt_minutes
    }

    pub fn window(&self) -> TimeSpan {
        self.window
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn n_pairs(&self) -> usize {
        self.pairs.len()
    }

    /// Q, the number of bins.
    pub fn n_bins(&self) -> usize {
        self.q
    }

    pub fn row(&self, j: usize) -> &[u64] {
        &self.counts[j * self.q..(j + 1) * self.q]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u64]> + '_ {
        self.counts.chunks_exact(self.q)
    }

    pub fn row_f64(&self, j: usize) -> Vec<f64> {
        self.row(j).iter().map(|&c| c as f64).collect()
    }

    pub fn rows_f64(&self) -> Vec<Vec<f64>> {
        (0..self.n_pairs()).map(|j| self.row_f64(j)).collect()
    }

    pub fn row_total(&self, j: usize) -> u64 {
        self.row(j).iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.iter().all(|&c| c == 0)
    }

    /// Whether `other` has the same pairs, bin width and window.
    pub fn same_geometry(&self, other: &ActivityPanel) -> bool {
        self.pairs == other.pairs
            && self.dt_minutes == other.dt_minutes
            && self.window == other.window
            && self.q == other.q
    }
}

fn check_distinct(pairs: &[Pair]) -> Result<()> {
    let mut seen = std::collections::HashSet::with_capacity(pairs.len());
    for p in pairs {
        if !seen.insert(p) {
            return Err(Error::Geometry(format!("pair {p} listed twice")));
        }
    }
    Ok(())
}

fn check_coverage(stream: &TickStream, window: &TimeSpan) -> Result<()> {
    if stream.span().covers(window) {
        Ok(())
    } else {
        Err(Error::Coverage {
            window: window.to_string(),
            span: stream.span().to_string(),
        })
    }
}

/// Counts events of `kind` per pair and bin.
///
/// Pairs absent from the stream get all-zero rows. Events for pairs not in
/// `pairs` are ignored.
pub fn bin_counts(
    stream: &TickStream,
    kind: EventKind,
    dt_minutes: u32,
    window: TimeSpan,
    pairs: &[Pair],
) -> Result<ActivityPanel> {
    let (quotes, trades) = bin_both(stream, dt_minutes, window, pairs)?;
    Ok(match kind {
        EventKind::Quote => quotes,
        EventKind::Trade => trades,
    })
}

/// Quote and trade panels from a single pass over the window's events.
pub fn bin_both(
    stream: &TickStream,
    dt_minutes: u32,
    window: TimeSpan,
    pairs: &[Pair],
) -> Result<(ActivityPanel, ActivityPanel)> {
    let q = bin_count(&window, dt_minutes)?;
    if pairs.is_empty() {
        return Err(Error::Geometry("pair list is empty".into()));
    }
    check_distinct(pairs)?;
    check_coverage(stream, &window)?;

    let index: HashMap<Pair, usize> = pairs.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let width = i64::from(dt_minutes) * MILLIS_PER_MINUTE;
    let mut quotes = vec![0u64; pairs.len() * q];
    let mut trades = vec![0u64; pairs.len() * q];
    for ev in stream.slice(&window) {
        let Some(&row) = index.get(&ev.pair) else {
            continue;
        };
        let offset = (ev.timestamp - window.start).num_milliseconds();
        let bin = (offset / width) as usize;
        let cell = row * q + bin;
        match ev.kind {
            EventKind::Quote => quotes[cell] += 1,
            EventKind::Trade => trades[cell] += 1,
        }
    }

    let build = |kind, counts| ActivityPanel {
        kind,
        dt_minutes,
        window,
        pairs: pairs.to_vec(),
        q,
        counts,
    };
    Ok((build(EventKind::Quote, quotes), build(EventKind::Trade, trades)))
}

/// Sums consecutive groups of `dt_new / dt` bins.
pub fn rebin(panel: &ActivityPanel, dt_new: u32) -> Result<ActivityPanel> {
    if dt_new == 0 || !dt_new.is_multiple_of(panel.dt_minutes) {
        return Err(Error::Geometry(format!(
            "{dt_new} min is not a multiple of the panel's {} min bins",
            panel.dt_minutes
        )));
    }
    let factor = (dt_new / panel.dt_minutes) as usize;
    let q_new = bin_count(&panel.window, dt_new)?;
    let counts = panel
        .rows()
        .flat_map(|row| row.chunks_exact(factor).map(|g| g.iter().sum::<u64>()))
        .collect();
    Ok(ActivityPanel {
        kind: panel.kind,
        dt_minutes: dt_new,
        window: panel.window,
        pairs: panel.pairs.clone(),
        q: q_new,
        counts,
    })
}

/// Window starting at `start` that spans `q` bins of `dt_minutes`.
pub fn window_of(start: crate::time::Timestamp, dt_minutes: u32, q: usize) -> Result<TimeSpan> {
    TimeSpan::new(start, start + Duration::minutes(i64::from(dt_minutes) * q as i64))
}
