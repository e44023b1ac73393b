// Generated moments next to their closed forms.
//
//     cargo run --example synth_oracles

use fxscale::scaling::panel_moments;
use fxscale::synthgen::{analytic_moments, gen_panel, GenSpec};

pub fn run() -> fxscale::Result<String> {
    let spec = GenSpec::log_spaced(4, 5.0, 500.0, 20_000, 8).with_coupling(0.2, 0.0);
    let exact = analytic_moments(&spec)?;
    let (quotes, trades) = gen_panel(&spec)?;
    let (means, vars) = panel_moments(&quotes);

    let mut out = String::from("pair     mean (exact)        variance (exact)     trades/quotes\n");
    for i in 0..spec.pairs.len() {
        out += &format!(
            "{}  {:8.3} ({:8.3})  {:10.1} ({:10.1})  {:.3}\n",
            spec.pairs[i],
            means[i],
            exact.means[i],
            vars[i],
            exact.variances[i],
            trades.row_total(i) as f64 / quotes.row_total(i) as f64
        );
    }
    Ok(out)
}

fn main() -> fxscale::Result<()> {
    print!("{}", run()?);
    Ok(())
}
