// Weekly report over a synthetic four-week tick stream, then the
// regression of average correlation on alpha across weeks.
//
//     cargo run --example rolling_weekly

use fxscale::panel::{plan_weeks, WeekAnchor};
use fxscale::studies::{alpha_corr_regression, rolling_weekly, RollingConfig};
use fxscale::synthgen::{default_start, gen_tick_stream, GenSpec};
use fxscale::EventKind;

pub fn run() -> fxscale::Result<String> {
    let spec = GenSpec::log_spaced(8, 0.1, 3.0, 4 * 10_080, 21).with_coupling(0.2, 0.8);
    let stream = gen_tick_stream(&spec, default_start(), 1)?;
    let plan = plan_weeks(stream.span(), WeekAnchor::default())?;
    let cfg = RollingConfig {
        replicates: 200,
        ..RollingConfig::default()
    };
    let report = rolling_weekly(&stream, &plan, &cfg)?;
    let mut out = report.to_csv();
    for kind in [EventKind::Quote, EventKind::Trade] {
        let reg = alpha_corr_regression(&report.regression_points(kind))?;
        out += &format!(
            "{}: <C> = {:.3} alpha {:+.3}, rms {:.4}, r = {:?}\n",
            kind.series_label(),
            reg.a,
            reg.b,
            reg.rms,
            reg.pearson_r
        );
    }
    Ok(out)
}

fn main() -> fxscale::Result<()> {
    print!("{}", run()?);
    Ok(())
}
