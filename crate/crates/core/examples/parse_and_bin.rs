// Parse a small tick file and count quotes and trades per 5-minute bin.
//
//     cargo run --example parse_and_bin

use fxscale::panel::bin_both;
use fxscale::tickdata::{parse_tick_str, OrderPolicy};
use fxscale::time::{parse_ts, TimeSpan};

const TICKS: &str = "\
timestamp,pair,kind
2008-08-04T08:00:12.250Z,EUR/USD,Q
2008-08-04T08:01:03.000Z,USD/JPY,Q
2008-08-04T08:01:03.000Z,USD/JPY,T
2008-08-04T08:04:59.999Z,EUR/USD,Q
2008-08-04T08:05:00.000Z,EUR/USD,Q
2008-08-04T08:05:00.000Z,EUR/USD,T
2008-08-04T08:12:40.500Z,USD/JPY,Q
2008-08-04T08:14:01.000Z,EUR/USD,Q
";

pub fn run() -> fxscale::Result<String> {
    let stream = parse_tick_str(TICKS, OrderPolicy::Strict)?;
    let start = parse_ts("2008-08-04T08:00:00Z")?;
    let window = TimeSpan::from_minutes(start, 15)?;
    let stream = stream.with_span(window)?;
    let pairs: Vec<_> = stream.pair_universe().iter().copied().collect();
    let (quotes, trades) = bin_both(&stream, 5, window, &pairs)?;

    let mut out = format!("{} events, pairs {:?}\n", stream.len(), pairs);
    for panel in [&quotes, &trades] {
        for (pair, row) in panel.pairs().iter().zip(panel.rows()) {
            out += &format!("{} {pair}: {row:?}\n", panel.kind().series_label());
        }
    }
    Ok(out)
}

fn main() -> fxscale::Result<()> {
    print!("{}", run()?);
    Ok(())
}
