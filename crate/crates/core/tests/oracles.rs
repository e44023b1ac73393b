//! Library results checked against independent reference computations.

use fxscale::moments::mean;
use fxscale::panel::bin_counts;
use fxscale::scaling::{fit_moments, fit_scaling, panel_moments};
use fxscale::synthgen::{analytic_moments, gen_panel, synthetic_pairs, GenSpec};
use fxscale::tickdata::{parse_tick_str, EventKind, OrderPolicy, Pair, TickEvent, TickStream};
use fxscale::time::{format_ts, from_millis, parse_ts, TimeSpan};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn mean_matches_exact_integer_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for len in [1usize, 2, 17, 1000, 100_000] {
        let counts: Vec<u64> = (0..len).map(|_| rng.random_range(0..1_000_000)).collect();
        let exact: u128 = counts.iter().map(|&c| u128::from(c)).sum();
        let want = exact as f64 / len as f64;
        let series: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
        let got = mean(&series).unwrap();
        assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{got} vs {want}");
    }
}

#[test]
fn binning_matches_edge_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let day = parse_ts("2008-08-04T00:00:00Z").unwrap();
    let pairs: Vec<Pair> = synthetic_pairs(3);
    let mut events: Vec<TickEvent> = (0..5000)
        .map(|_| {
            let ms = rng.random_range(0..86_400_000i64);
            let kind = if rng.random_bool(0.3) { EventKind::Trade } else { EventKind::Quote };
            TickEvent::new(day + chrono::Duration::milliseconds(ms), pairs[rng.random_range(0..3)], kind)
        })
        .collect();
    events.sort_by_key(|e| e.timestamp);
    let stream = TickStream::new(events.clone(), TimeSpan::from_minutes(day, 1440).unwrap()).unwrap();

    for (start_min, dt, q) in [(0i64, 1u32, 1440usize), (90, 15, 40), (600, 7, 11)] {
        let start = day + chrono::Duration::minutes(start_min);
        let window = TimeSpan::from_minutes(start, dt as i64 * q as i64).unwrap();
        for kind in [EventKind::Quote, EventKind::Trade] {
            let panel = bin_counts(&stream, kind, dt, window, &pairs).unwrap();
            let mut want = vec![vec![0u64; q]; 3];
            for e in events.iter().filter(|e| e.kind == kind) {
                let j = pairs.iter().position(|p| *p == e.pair).unwrap();
                for (k, cell) in want[j].iter_mut().enumerate() {
                    let lo = start + chrono::Duration::minutes(dt as i64 * k as i64);
                    let hi = lo + chrono::Duration::minutes(dt as i64);
                    if lo <= e.timestamp && e.timestamp < hi {
                        *cell += 1;
                    }
                }
            }
            let got: Vec<Vec<u64>> = panel.rows().map(<[u64]>::to_vec).collect();
            assert_eq!(got, want, "window start +{start_min} min, dt {dt}, {kind:?}");
        }
    }
}

#[test]
fn shuffled_hundred_thousand_events_parse_like_sorted() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t0 = parse_ts("2008-08-03T00:00:00Z").unwrap().timestamp_millis();
    let codes = ["EUR/USD", "USD/JPY", "GBP/USD", "EUR/JPY", "AUD/USD"];
    let mut ms: Vec<i64> = (0..100_000).map(|_| rng.random_range(0..7 * 86_400_000)).collect();
    ms.sort_unstable();
    ms.dedup();
    let mut lines: Vec<String> = ms
        .iter()
        .map(|&m| {
            format!(
                "{},{},{}",
                format_ts(&from_millis(t0 + m).unwrap()),
                codes[rng.random_range(0..codes.len())],
                if rng.random_bool(0.5) { 'Q' } else { 'T' }
            )
        })
        .collect();
    let sorted = parse_tick_str(&lines.join("\n"), OrderPolicy::Strict).unwrap();
    lines.shuffle(&mut rng);
    let shuffled = lines.join("\n");
    assert!(parse_tick_str(&shuffled, OrderPolicy::Strict).is_err());
    let lenient = parse_tick_str(&shuffled, OrderPolicy::SortLenient).unwrap();
    assert_eq!(lenient.events(), sorted.events());
    assert_eq!(lenient.span(), sorted.span());
}

#[test]
fn two_point_closed_form_exponent() {
    // Line through (ln 100, ln 2600) and (ln 1e4, ln(1e4 + 0.25e8)), halved.
    const FROZEN: f64 = 0.9957850859399212;
    let spec = GenSpec::log_spaced(2, 1e2, 1e4, 10, 0).with_coupling(0.25, 0.0);
    let m = analytic_moments(&spec).unwrap();
    let fit = fit_moments(&spec.pairs, &m.means, &m.variances, 0.0).unwrap();
    assert!((fit.alpha - FROZEN).abs() < 1e-12, "{}", fit.alpha);
    assert!(fit.normr < 1e-12);
}

#[test]
fn sample_moments_track_closed_forms() {
    let q = 20_000;
    for seed in 0..3 {
        let spec = GenSpec::log_spaced(5, 2.0, 200.0, q, seed)
            .with_coupling(0.3, 0.0)
            .with_trade_fraction(0.4);
        let m = analytic_moments(&spec).unwrap();
        let (p, d) = gen_panel(&spec).unwrap();
        let (means, vars) = panel_moments(&p);
        // 4/sqrt(Q) relative band on the mean; the variance of a
        // lognormal-mixed count is heavier-tailed and gets 20%.
        let band = 4.0 / (q as f64).sqrt();
        for i in 0..5 {
            let rel_mean = (means[i] - m.means[i]).abs() / m.means[i];
            let rel_var = (vars[i] - m.variances[i]).abs() / m.variances[i];
            assert!(rel_mean < band, "seed {seed} pair {i} mean {rel_mean}");
            assert!(rel_var < 0.2, "seed {seed} pair {i} variance {rel_var}");
        }
        // Thinning: D totals within a CLT band of f times P totals.
        for i in 0..5 {
            let (tp, td) = (p.row_total(i) as f64, d.row_total(i) as f64);
            let sd = (tp * 0.4 * 0.6).sqrt();
            assert!((td - 0.4 * tp).abs() < 5.0 * sd, "pair {i}: {td} vs {}", 0.4 * tp);
        }
    }
}

#[test]
fn independent_poisson_oracle() {
    let (p, _) = gen_panel(&GenSpec::log_spaced(30, 1.0, 1e3, 10_080, 99)).unwrap();
    let fit = fit_scaling(&p, 0.0).unwrap();
    assert!((fit.alpha - 0.5).abs() < 0.02, "{}", fit.alpha);
}
