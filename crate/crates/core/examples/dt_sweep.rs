// Alpha and average correlation as the bin width grows, for activity
// driven by a common factor that persists for about half an hour.
//
//     cargo run --example dt_sweep

use fxscale::studies::dt_sweep;
use fxscale::synthgen::{gen_panel, GenSpec};

pub fn run() -> fxscale::Result<String> {
    let memory = (-1.0f64 / 30.0).exp();
    let spec = GenSpec::log_spaced(15, 0.5, 50.0, 12_000, 5).with_coupling(0.1, memory);
    let (quotes, _) = gen_panel(&spec)?;
    let curve = dt_sweep(&quotes, &[1, 5, 15, 60, 240, 1500], 0.0)?;
    Ok(curve.to_csv())
}

fn main() -> fxscale::Result<()> {
    print!("{}", run()?);
    Ok(())
}
