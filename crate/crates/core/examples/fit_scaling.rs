// Scaling exponent of independent and of commonly driven activity.
//
//     cargo run --example fit_scaling

use fxscale::scaling::fit_scaling;
use fxscale::synthgen::{gen_panel, GenSpec};

pub fn run() -> fxscale::Result<String> {
    let mut out = String::new();
    for v in [0.0, 0.05, 0.25] {
        let spec = GenSpec::log_spaced(20, 1.0, 1e3, 10_080, 1).with_coupling(v, 0.0);
        let (quotes, _) = gen_panel(&spec)?;
        let fit = fit_scaling(&quotes, 0.0)?;
        out += &format!(
            "v = {v:<4}  alpha = {:.3}  A = {:.3}  normr = {:.3}  pairs = {}\n",
            fit.alpha, fit.prefactor, fit.normr, fit.n_used
        );
    }
    Ok(out)
}

fn main() -> fxscale::Result<()> {
    print!("{}", run()?);
    Ok(())
}
