//! Panel files: CSV with a JSON sidecar, and the `FXP1` binary form.
//!
//! CSV layout is one row per pair, `pair,bin_0,...,bin_{Q-1}`. The sidecar
//! holds `{kind, dt_minutes, t0, t1}`.
//!
//! `FXP1` layout, all integers little-endian:
//!
//! ```text
//! offset  size     field
//! 0       4        magic "FXP1"
//! 4       1        kind (0 = quote, 1 = trade)
//! 5       3        reserved, zero
//! 8       4        dt_minutes (u32)
//! 12      8        t0, ms since Unix epoch (i64)
//! 20      8        t1, ms since Unix epoch (i64)
//! 28      4        N (u32)
//! 32      8        Q (u64)
//! 40      7*N      pair codes, ASCII
//! ...     8*N*Q    counts (u64), pair-major: all Q bins of
//!                  pair 0, then pair 1, ...
//! ```

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use super::ActivityPanel;
use crate::error::{Error, Result};
use crate::tickdata::{EventKind, Pair};
use crate::time::{format_ts, from_millis, parse_ts, TimeSpan};

pub const BINARY_MAGIC: &[u8; 4] = b"FXP1";
const HEADER_LEN: usize = 40;

/// Sidecar metadata accompanying a panel CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelMeta {
    pub kind: EventKind,
    pub dt_minutes: u32,
    pub t0: String,
    pub t1: String,
}

impl PanelMeta {
    pub fn of(panel: &ActivityPanel) -> Self {
        PanelMeta {
            kind: panel.kind(),
            dt_minutes: panel.dt_minutes(),
            t0: format_ts(&panel.window().start),
            t1: format_ts(&panel.window().end),
        }
    }

    pub fn window(&self) -> Result<TimeSpan> {
        TimeSpan::new(parse_ts(&self.t0)?, parse_ts(&self.t1)?)
    }
}

/// Writes the CSV body to `csv` and the sidecar JSON to `sidecar`.
pub fn write_panel_csv<W: Write, S: Write>(panel: &ActivityPanel, mut csv: W, mut sidecar: S) -> Result<()> {
    write!(csv, "pair")?;
    for k in 0..panel.n_bins() {
        write!(csv, ",bin_{k}")?;
    }
    writeln!(csv)?;
    for (pair, row) in panel.pairs().iter().zip(panel.rows()) {
        write!(csv, "{pair}")?;
        for c in row {
            write!(csv, ",{c}")?;
        }
        writeln!(csv)?;
    }
    csv.flush()?;
    serde_json::to_writer_pretty(&mut sidecar, &PanelMeta::of(panel))?;
    writeln!(sidecar)?;
    sidecar.flush()?;
    Ok(())
}

/// Reads a panel CSV; geometry comes from `meta`.
pub fn read_panel_csv<R: Read>(csv: R, meta: &PanelMeta) -> Result<ActivityPanel> {
    let reader = BufReader::new(csv);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::format("panel CSV", "missing header"))?;
    let q = header.split(',').count().saturating_sub(1);
    if !header.starts_with("pair,") {
        return Err(Error::format("panel CSV", "header must start with `pair,`"));
    }
    let mut pairs = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let pair: Pair = fields.next().unwrap_or_default().trim().parse()?;
        let row = fields
            .map(|f| {
                f.trim().parse::<u64>().map_err(|e| {
                    Error::format("panel CSV", format!("line {}: count {f:?}: {e}", i + 2))
                })
            })
            .collect::<Result<Vec<u64>>>()?;
        if row.len() != q {
            return Err(Error::format(
                "panel CSV",
                format!("line {}: {} counts, header has {q}", i + 2, row.len()),
            ));
        }
        pairs.push(pair);
        rows.push(row);
    }
    ActivityPanel::from_rows(meta.kind, meta.dt_minutes, meta.window()?, pairs, rows)
}

pub fn write_panel_binary<W: Write>(panel: &ActivityPanel, mut out: W) -> Result<()> {
    let mut header = Vec::with_capacity(HEADER_LEN + 7 * panel.n_pairs());
    header.extend_from_slice(BINARY_MAGIC);
    header.push(match panel.kind() {
        EventKind::Quote => 0,
        EventKind::Trade => 1,
    });
    header.extend_from_slice(&[0; 3]);
    header.extend_from_slice(&panel.dt_minutes().to_le_bytes());
    header.extend_from_slice(&panel.window().start.timestamp_millis().to_le_bytes());
    header.extend_from_slice(&panel.window().end.timestamp_millis().to_le_bytes());
    header.extend_from_slice(&(panel.n_pairs() as u32).to_le_bytes());
    header.extend_from_slice(&(panel.n_bins() as u64).to_le_bytes());
    for p in panel.pairs() {
        header.extend_from_slice(p.as_bytes());
    }
    out.write_all(&header)?;
    let mut buf = Vec::with_capacity(8 * panel.n_bins());
    for row in panel.rows() {
        buf.clear();
        for c in row {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_panel_binary<R: Read>(mut input: R) -> Result<ActivityPanel> {
    let mut header = [0u8; HEADER_LEN];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::format("FXP1 panel", "truncated header"))?;
    if &header[0..4] != BINARY_MAGIC {
        return Err(Error::format("FXP1 panel", "bad magic bytes"));
    }
    let kind = match header[4] {
        0 => EventKind::Quote,
        1 => EventKind::Trade,
        other => return Err(Error::format("FXP1 panel", format!("kind byte {other}"))),
    };
    let le_u32 = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap());
    let le_i64 = |b: &[u8]| i64::from_le_bytes(b.try_into().unwrap());
    let dt_minutes = le_u32(&header[8..12]);
    let t0 = from_millis(le_i64(&header[12..20]))?;
    let t1 = from_millis(le_i64(&header[20..28]))?;
    let n = le_u32(&header[28..32]) as usize;
    let q = u64::from_le_bytes(header[32..40].try_into().unwrap()) as usize;

    let mut codes = vec![0u8; 7 * n];
    input
        .read_exact(&mut codes)
        .map_err(|_| Error::format("FXP1 panel", "truncated pair table"))?;
    let pairs = codes
        .chunks_exact(7)
        .map(Pair::from_bytes)
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::with_capacity(n);
    let mut buf = vec![0u8; 8 * q];
    for _ in 0..n {
        input
            .read_exact(&mut buf)
            .map_err(|_| Error::format("FXP1 panel", "truncated counts"))?;
        rows.push(
            buf.chunks_exact(8)
                .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
                .collect(),
        );
    }
    ActivityPanel::from_rows(kind, dt_minutes, TimeSpan::new(t0, t1)?, pairs, rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ActivityPanel {
        let t0 = parse_ts("2008-08-03T00:00:00Z").unwrap();
        ActivityPanel::from_rows(
            EventKind::Trade,
            5,
            TimeSpan::from_minutes(t0, 15).unwrap(),
            vec!["EUR/USD".parse().unwrap(), "USD/JPY".parse().unwrap()],
            vec![vec![1, 0, u64::MAX], vec![0, 0, 7]],
        )
        .unwrap()
    }

    #[test]
    fn csv_layout() {
        let p = sample();
        let (mut csv, mut meta) = (Vec::new(), Vec::new());
        write_panel_csv(&p, &mut csv, &mut meta).unwrap();
        let text = String::from_utf8(csv.clone()).unwrap();
        assert_eq!(
            text,
            format!("pair,bin_0,bin_1,bin_2\nEUR/USD,1,0,{}\nUSD/JPY,0,0,7\n", u64::MAX)
        );
        let meta: PanelMeta = serde_json::from_slice(&meta).unwrap();
        assert_eq!(meta.kind, EventKind::Trade);
        assert_eq!(meta.t1, "2008-08-03T00:15:00.000Z");
        assert_eq!(read_panel_csv(&csv[..], &meta).unwrap(), p);
    }

    #[test]
    fn binary_layout() {
        let p = sample();
        let mut bytes = Vec::new();
        write_panel_binary(&p, &mut bytes).unwrap();
        assert_eq!(&bytes[..4], b"FXP1");
        assert_eq!(bytes.len(), HEADER_LEN + 14 + 8 * 6);
        // First count of the second pair.
        let off = HEADER_LEN + 14 + 8 * 3;
        assert_eq!(u64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()), 0);
        assert_eq!(read_panel_binary(&bytes[..]).unwrap(), p);

        assert!(read_panel_binary(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_panel_binary(&bad[..]).is_err());
    }

    #[test]
    fn csv_row_length_mismatch() {
        let meta = PanelMeta::of(&sample());
        let text = "pair,bin_0,bin_1,bin_2\nEUR/USD,1,0\n";
        assert!(read_panel_csv(text.as_bytes(), &meta).is_err());
    }
}
