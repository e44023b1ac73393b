// Quote/trade cross-correlation against lag, for thinned trades and for
// trades that copy the previous bin's quotes.
//
//     cargo run --example pd_lag_profile

use fxscale::moments::Normalization;
use fxscale::panel::ActivityPanel;
use fxscale::studies::pd_lag_profile;
use fxscale::synthgen::{gen_panel, GenSpec};
use fxscale::EventKind;

pub fn run() -> fxscale::Result<String> {
    let spec = GenSpec::log_spaced(10, 1.0, 30.0, 5_000, 9)
        .with_coupling(0.2, 0.9)
        .with_trade_fraction(0.3);
    let (p, d) = gen_panel(&spec)?;
    let thinned = pd_lag_profile(&p, &d, -5, 5, Normalization::LagZero)?;

    // D(k) = P(k - 1)
    let q = p.n_bins();
    let shift = |rows: Vec<Vec<u64>>, kind| {
        ActivityPanel::from_rows(kind, 1, p.window(), p.pairs().to_vec(), rows)
    };
    let lagged: Vec<Vec<u64>> = p
        .rows()
        .map(|r| std::iter::once(0).chain(r[..q - 1].iter().copied()).collect())
        .collect();
    let d_shift = shift(lagged, EventKind::Trade)?;
    let shifted = pd_lag_profile(&p, &d_shift, -5, 5, Normalization::LagZero)?;

    Ok(format!(
        "thinned (argmax {:?}):\n{}shifted (argmax {:?}):\n{}",
        thinned.argmax,
        thinned.to_csv(),
        shifted.argmax,
        shifted.to_csv()
    ))
}

fn main() -> fxscale::Result<()> {
    print!("{}", run()?);
    Ok(())
}
