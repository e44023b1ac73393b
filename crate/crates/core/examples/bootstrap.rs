// Bootstrap dispersion of the scaling exponent, m = 100 bins per replicate.
//
//     cargo run --example bootstrap

use fxscale::scaling::{bootstrap_moments, bootstrap_scaling, fit_scaling};
use fxscale::synthgen::{gen_panel, GenSpec};

pub fn run() -> fxscale::Result<String> {
    let spec = GenSpec::log_spaced(30, 10.0, 1e4, 10_080, 3);
    let (quotes, _) = gen_panel(&spec)?;
    let fit = fit_scaling(&quotes, 0.0)?;
    let boot = bootstrap_scaling(&quotes, 500, 100, 42, 0.0)?;
    let row = bootstrap_moments(&quotes.row_f64(0), 200, 42)?;
    Ok(format!(
        "alpha = {:.4}, bootstrap mean {:.4} +/- {:.4} (1 sd, B = {}, m = {})\n\
         pair {}: mean {:.3} +/- {:.3}, sd {:.3} +/- {:.3}\n",
        fit.alpha,
        boot.estimate_mean,
        boot.error_bar(1.0),
        boot.n_replicates,
        boot.points_per_replicate,
        quotes.pairs()[0],
        row.mean.estimate_mean,
        row.mean.estimate_sd,
        row.sd.estimate_mean,
        row.sd.estimate_sd,
    ))
}

fn main() -> fxscale::Result<()> {
    print!("{}", run()?);
    Ok(())
}
