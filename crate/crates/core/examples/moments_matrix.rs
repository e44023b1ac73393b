// Correlation matrix of a synthetic quote panel at lags 0 and 3.
//
//     cargo run --example moments_matrix

use fxscale::moments::{corr_matrix, lagged_cov, Normalization};
use fxscale::synthgen::{gen_panel, GenSpec};

pub fn run() -> fxscale::Result<String> {
    let spec = GenSpec::log_spaced(4, 1.0, 20.0, 2_000, 17).with_coupling(0.3, 0.8);
    let (quotes, _) = gen_panel(&spec)?;
    let rows = quotes.rows_f64();

    let mut out = String::new();
    for tau in [-3isize, 0, 3] {
        let c = lagged_cov(&rows[0], &rows[1], tau)?;
        out += &format!("Cov(x0, x1)({tau:+}) = {:.4} over {} terms\n", c.value, c.terms);
    }
    for tau in [0, 3] {
        let summary = corr_matrix(&quotes, tau, Normalization::AtLag)?;
        out += &format!(
            "tau = {tau}: global average {:.4}, defined {:.0}%\n{}",
            summary.global_avg,
            100.0 * summary.defined_fraction,
            summary.to_csv()
        );
    }
    Ok(out)
}

fn main() -> fxscale::Result<()> {
    print!("{}", run()?);
    Ok(())
}
