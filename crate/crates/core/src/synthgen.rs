//! Synthetic quote/trade activity with known moments.
//!
//! A common positive factor `s(k)` with mean 1 and variance `v` modulates
//! every pair's intensity:
//!
//! ```text
//! z(0) ~ N(0, 1),   z(k) = ρ z(k−1) + sqrt(1 − ρ²) ε(k)
//! s(k) = exp(σ z(k) − σ²/2),   σ² = ln(1 + v)
//! P_i(k) | s ~ Poisson(λ_i s(k))          independently over i
//! D_i(k) | P ~ Binomial(P_i(k), f)
//! ```
//!
//! At ρ = 0 the lag-0 moments are closed-form: `E P_i = λ_i`,
//! `Var P_i = λ_i + v λ_i²`, `Cov(P_i, P_j) = v λ_i λ_j`. The implied
//! scaling exponent runs from 1/2 (λ v ≪ 1) to 1 (λ v ≫ 1).
//!
//! Randomness comes from [`crate::rng::stream_rng`]: stream 0 drives the
//! factor, stream `1 + i` the counts of pair `i`, and stream `2³² + i` its
//! event timestamps.

use chrono::Duration;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{window_of, ActivityPanel};
use crate::rng::stream_rng;
use crate::tickdata::{EventKind, Pair, TickEvent, TickStream};
use crate::time::{parse_ts, Timestamp, MILLIS_PER_MINUTE};

const TIMESTAMP_STREAM_BASE: u64 = 1 << 32;

/// Upper bound on λ·s(k) at a 12σ factor draw; counts stay exact in f64.
const MAX_INTENSITY: f64 = 1e15;

/// Generator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub pairs: Vec<Pair>,
    /// Base intensity per pair, events per bin.
    pub rates: Vec<f64>,
    /// Number of bins.
    #[serde(rename = "Q")]
    pub q: usize,
    /// Variance of the common factor; 0 gives independent Poisson rows.
    pub coupling_v: f64,
    /// AR(1) coefficient of the factor's log, in [0, 1).
    pub factor_memory: f64,
    /// Probability that a quote is also recorded as a trade.
    pub trade_fraction: f64,
    pub seed: u64,
}

impl GenSpec {
    /// `n` pairs with rates log-spaced between `lo` and `hi` inclusive.
    /// Pair codes are synthetic (`P00/USD`, `P01/USD`, ...).
    pub fn log_spaced(n: usize, lo: f64, hi: f64, q: usize, seed: u64) -> Self {
        let rates = if n == 1 {
            vec![lo]
        } else {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    i if i == n - 1 => hi,
                    i => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        };
        GenSpec {
            pairs: synthetic_pairs(n),
            rates,
            q,
            coupling_v: 0.0,
            factor_memory: 0.0,
            trade_fraction: 0.5,
            seed,
        }
    }

    pub fn with_coupling(mut self, v: f64, memory: f64) -> Self {
        self.coupling_v = v;
        self.factor_memory = memory;
        self
    }

    pub fn with_trade_fraction(mut self, f: f64) -> Self {
        self.trade_fraction = f;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Spec(m));
        if self.pairs.is_empty() {
            return bad("at least one pair is required".into());
        }
        if self.rates.len() != self.pairs.len() {
            return bad(format!(
                "{} rates for {} pairs",
                self.rates.len(),
                self.pairs.len()
            ));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(p) = self.pairs.iter().find(|p| !seen.insert(**p)) {
            return bad(format!("pair {p} listed twice"));
        }
        if let Some(r) = self.rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return bad(format!("rates must be positive and finite, got {r}"));
        }
        if self.q < 2 {
            return bad(format!("Q must be at least 2, got {}", self.q));
        }
        if !(self.coupling_v.is_finite() && self.coupling_v >= 0.0) {
            return bad(format!("coupling_v must be >= 0, got {}", self.coupling_v));
        }
        if !(0.0..1.0).contains(&self.factor_memory) {
            return bad(format!(
                "factor_memory must lie in [0, 1), got {}",
                self.factor_memory
            ));
        }
        if !(0.0..=1.0).contains(&self.trade_fraction) {
            return bad(format!(
                "trade_fraction must lie in [0, 1], got {}",
                self.trade_fraction
            ));
        }
        let sigma = self.coupling_v.ln_1p().sqrt();
        let max_rate = self.rates.iter().cloned().fold(0.0, f64::max);
        let peak = max_rate * (12.0 * sigma).exp();
        if !peak.is_finite() || peak >= MAX_INTENSITY {
            return bad(format!(
                "coupling_v = {} has no usable lognormal parameterization",
                self.coupling_v
            ));
        }
        Ok(())
    }
}

/// `P00/USD`, `P01/USD`, ... (valid `AAA/BBB` codes).
pub fn synthetic_pairs(n: usize) -> Vec<Pair> {
    assert!(n <= 26 * 100, "synthetic pair codes run out at 2600");
    (0..n)
        .map(|i| {
            let code = format!("{}{:02}/USD", (b'A' + (i / 100) as u8) as char, i % 100);
            code.parse().expect("generated code is well-formed")
        })
        .collect()
}

/// Default origin for generated panels: Sunday 2008-08-03 00:00 UTC.
pub fn default_start() -> Timestamp {
    parse_ts("2008-08-03T00:00:00Z").expect("constant timestamp")
}

/// Draws the common factor path s(0..Q).
pub fn gen_factor(spec: &GenSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.coupling_v == 0.0 {
        return Ok(vec![1.0; spec.q]);
    }
    let mut rng = stream_rng(spec.seed, 0);
    let sigma2 = spec.coupling_v.ln_1p();
    let sigma = sigma2.sqrt();
    let rho = spec.factor_memory;
    let innov = (1.0 - rho * rho).sqrt();
    let mut z: f64 = rng.sample(StandardNormal);
    let mut s = Vec::with_capacity(spec.q);
    for k in 0..spec.q {
        if k > 0 {
            let e: f64 = rng.sample(StandardNormal);
            z = rho * z + innov * e;
        }
        s.push((sigma * z - 0.5 * sigma2).exp());
    }
    Ok(s)
}

fn gen_rows(spec: &GenSpec, factor: &[f64]) -> Vec<(Vec<u64>, Vec<u64>)> {
    (0..spec.pairs.len())
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(spec.seed, 1 + i as u64);
            let lambda = spec.rates[i];
            let quotes: Vec<u64> = factor
                .iter()
                .map(|s| {
                    let rate = lambda * s;
                    if rate <= 0.0 {
                        return 0;
                    }
                    let poisson = Poisson::new(rate).expect("validated finite rate");
                    let draw: f64 = poisson.sample(&mut rng);
                    draw as u64
                })
                .collect();
            let trades = quotes
                .iter()
                .map(|&n| {
                    Binomial::new(n, spec.trade_fraction)
                        .expect("validated fraction")
                        .sample(&mut rng)
                })
                .collect();
            (quotes, trades)
        })
        .collect()
}

/// Quote and trade panels at [`default_start`] with 1-minute bins.
pub fn gen_panel(spec: &GenSpec) -> Result<(ActivityPanel, ActivityPanel)> {
    gen_panel_at(spec, default_start(), 1)
}

/// Quote and trade panels on the window `[start, start + Q·dt)`.
pub fn gen_panel_at(spec: &GenSpec, start: Timestamp, dt_minutes: u32) -> Result<(ActivityPanel, ActivityPanel)> {
    let factor = gen_factor(spec)?;
    let window = window_of(start, dt_minutes, spec.q)?;
    let (quotes, trades): (Vec<_>, Vec<_>) = gen_rows(spec, &factor).into_iter().unzip();
    let p = ActivityPanel::from_rows(EventKind::Quote, dt_minutes, window, spec.pairs.clone(), quotes)?;
    let d = ActivityPanel::from_rows(EventKind::Trade, dt_minutes, window, spec.pairs.clone(), trades)?;
    Ok((p, d))
}

/// Expands generated counts into events with uniformly scattered
/// millisecond timestamps inside their bins. Each trade shares its
/// timestamp with one of the same bin's quotes. Binning the result on the
/// same window and width reproduces [`gen_panel_at`] exactly.
pub fn gen_tick_stream(spec: &GenSpec, start: Timestamp, dt_minutes: u32) -> Result<TickStream> {
    let (p, d) = gen_panel_at(spec, start, dt_minutes)?;
    let width = i64::from(dt_minutes) * MILLIS_PER_MINUTE;
    let per_pair: Vec<Vec<TickEvent>> = (0..p.n_pairs())
        .into_par_iter()
        .map(|i| {
            let pair = spec.pairs[i];
            let mut rng = stream_rng(spec.seed, TIMESTAMP_STREAM_BASE + i as u64);
            let mut out = Vec::with_capacity((p.row_total(i) + d.row_total(i)) as usize);
            for (k, (&nq, &nt)) in p.row(i).iter().zip(d.row(i)).enumerate() {
                let bin_start = start + Duration::milliseconds(width * k as i64);
                for c in 0..nq {
                    let ts = bin_start + Duration::milliseconds(rng.random_range(0..width));
                    out.push(TickEvent::new(ts, pair, EventKind::Quote));
                    if c < nt {
                        out.push(TickEvent::new(ts, pair, EventKind::Trade));
                    }
                }
            }
            out
        })
        .collect();
    let mut events: Vec<TickEvent> = per_pair.into_iter().flatten().collect();
    events.sort_unstable_by_key(|e| (e.timestamp, e.pair, e.kind));
    TickStream::new(events, p.window()).map(|s| s.with_header("timestamp,pair,kind"))
}

/// Closed-form lag-0 moments of the quote panel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticMoments {
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    /// Off-diagonal `v λ_i λ_j`; diagonal holds the variances.
    pub covariance: Vec<Vec<f64>>,
    pub correlation: Vec<Vec<f64>>,
}

/// Closed-form moments; only defined for a memoryless factor.
pub fn analytic_moments(spec: &GenSpec) -> Result<AnalyticMoments> {
    spec.validate()?;
    if spec.factor_memory != 0.0 {
        return Err(Error::Unsupported(
            "closed-form moments require factor_memory = 0".into(),
        ));
    }
    let v = spec.coupling_v;
    let means = spec.rates.clone();
    let variances: Vec<f64> = spec.rates.iter().map(|l| l + v * l * l).collect();
    let n = means.len();
    let covariance: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        variances[i]
                    } else {
                        v * spec.rates[i] * spec.rates[j]
                    }
                })
                .collect()
        })
        .collect();
    let correlation = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| covariance[i][j] / (variances[i] * variances[j]).sqrt())
                .collect()
        })
        .collect();
    Ok(AnalyticMoments {
        means,
        variances,
        covariance,
        correlation,
    })
}
