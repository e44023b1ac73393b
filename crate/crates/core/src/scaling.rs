//! Fluctuation scaling: fitting `Var(X_i) = A · ⟨X_i⟩^{2α}` across pairs.
//!
//! Each usable pair contributes the point `(ln ⟨X_i⟩, ln Cov(X_i, X_i)(0))`.
//! Ordinary least squares of the ordinate on the abscissa gives slope `2α`
//! and intercept `ln A`. The root of the summed squared residuals, `normr`,
//! measures how far the week's cross-section departs from a single power
//! law; spikes in it mark scaling breaks.
//!
//! Natural logarithms are used throughout. `α` does not depend on the base;
//! `A` and `normr` do.

use rand::Rng;
use rayon::prelude::*;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::moments::{centered_cov, deviations};
use crate::panel::ActivityPanel;
use crate::regression::ols;
use crate::rng::stream_rng;
use crate::tickdata::Pair;

/// Replicates are redrawn at most this many times before counting as failed.
pub const BOOTSTRAP_RETRY_CAP: usize = 16;
/// Largest tolerated share of failed replicates.
pub const BOOTSTRAP_FAILURE_BUDGET: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub pair: Pair,
    pub reason: String,
}

/// One pair's coordinates in the log-log plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitPoint {
    pub pair: Pair,
    pub log_mean: f64,
    pub log_var: f64,
}

impl Serialize for FitPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(2))?;
        seq.serialize_element(&self.log_mean)?;
        seq.serialize_element(&self.log_var)?;
        seq.end()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingFit {
    pub alpha: f64,
    #[serde(rename = "A")]
    pub prefactor: f64,
    pub normr: f64,
    pub n_used: usize,
    pub excluded: Vec<Exclusion>,
    /// Usable pairs, in panel order.
    pub points: Vec<FitPoint>,
}

/// Per-pair temporal mean and lag-0 variance of a panel.
pub fn panel_moments(panel: &ActivityPanel) -> (Vec<f64>, Vec<f64>) {
    (0..panel.n_pairs())
        .map(|j| {
            let row = panel.row_f64(j);
            series_moments(&row)
        })
        .unzip()
}

fn series_moments(row: &[f64]) -> (f64, f64) {
    let d = deviations(row).expect("series are non-empty");
    let mean = row.iter().sum::<f64>() / row.len() as f64;
    (mean, centered_cov(&d, &d, 0))
}

/// Fits the scaling law to a panel. Pairs whose mean does not exceed
/// `min_mean`, or whose variance is zero, are excluded and listed.
pub fn fit_scaling(panel: &ActivityPanel, min_mean: f64) -> Result<ScalingFit> {
    let (means, variances) = panel_moments(panel);
    fit_moments(panel.pairs(), &means, &variances, min_mean)
}

/// Fits the scaling law to precomputed per-pair means and variances.
pub fn fit_moments(pairs: &[Pair], means: &[f64], variances: &[f64], min_mean: f64) -> Result<ScalingFit> {
    if min_mean < 0.0 || min_mean.is_nan() {
        return Err(Error::Config(format!("min_mean must be >= 0, got {min_mean}")));
    }
    let mut points = Vec::with_capacity(pairs.len());
    let mut excluded = Vec::new();
    for ((&pair, &m), &v) in pairs.iter().zip(means).zip(variances) {
        let reason = if !(m > min_mean && m > 0.0) {
            Some(format!("mean {m} does not exceed {min_mean}"))
        } else if v.is_nan() || v <= 0.0 {
            Some("zero variance".to_string())
        } else {
            None
        };
        match reason {
            Some(reason) => excluded.push(Exclusion { pair, reason }),
            None => points.push(FitPoint {
                pair,
                log_mean: m.ln(),
                log_var: v.ln(),
            }),
        }
    }
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            usable: points.len(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.log_mean).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.log_var).collect();
    let line = ols(&xs, &ys).map_err(|e| match e {
        Error::Degenerate(_) => Error::Degenerate("all usable pairs have the same mean".into()),
        other => other,
    })?;
    Ok(ScalingFit {
        alpha: line.slope / 2.0,
        prefactor: line.intercept.exp(),
        normr: line.residual_norm,
        n_used: points.len(),
        excluded,
        points,
    })
}

/// Mean and dispersion of a statistic over bootstrap replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    #[serde(rename = "mean")]
    pub estimate_mean: f64,
    /// Standard deviation across replicates (divisor B − 1; 0 when B = 1).
    #[serde(rename = "sd")]
    pub estimate_sd: f64,
    #[serde(rename = "B")]
    pub n_replicates: usize,
    #[serde(rename = "m")]
    pub points_per_replicate: usize,
    pub seed: u64,
    #[serde(default)]
    pub failed: usize,
}

impl BootstrapResult {
    /// Half-width `k · sd`; `k = 2` gives two-SD error bars, `k = 1` the
    /// ±1 SD band reported as a 66.6% level.
    pub fn error_bar(&self, k: f64) -> f64 {
        k * self.estimate_sd
    }

    fn from_values(values: &[f64], m: usize, seed: u64, failed: usize) -> Self {
        let b = values.len();
        let mean = values.iter().sum::<f64>() / b as f64;
        let sd = if b > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (b - 1) as f64).sqrt()
        } else {
            0.0
        };
        BootstrapResult {
            estimate_mean: mean,
            estimate_sd: sd,
            n_replicates: b + failed,
            points_per_replicate: m,
            seed,
            failed,
        }
    }
}

fn draw_indices<R: Rng>(rng: &mut R, q: usize, m: usize, out: &mut Vec<usize>) {
    out.clear();
    // u32 sampling keeps the index stream identical across pointer widths.
    out.extend((0..m).map(|_| rng.random_range(0..q as u32) as usize));
}

/// m-out-of-n bootstrap of the scaling exponent.
///
/// Replicate `r` draws `m` bin indices uniformly with replacement from its
/// own random stream `(seed, r)`, restricts every pair to those bins, and
/// refits α. A replicate with fewer than two usable pairs is redrawn up to
/// [`BOOTSTRAP_RETRY_CAP`] times.
pub fn bootstrap_scaling(
    panel: &ActivityPanel,
    replicates: usize,
    m: usize,
    seed: u64,
    min_mean: f64,
) -> Result<BootstrapResult> {
    let q = panel.n_bins();
    if replicates == 0 {
        return Err(Error::Config("bootstrap needs at least one replicate".into()));
    }
    if m < 2 || m > q {
        return Err(Error::Config(format!(
            "bootstrap sample size must lie in [2, {q}], got {m}"
        )));
    }
    let rows = panel.rows_f64();
    let pairs = panel.pairs();

    let alphas: Vec<Option<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let mut idx = Vec::with_capacity(m);
            let mut sample = vec![0.0; m];
            let mut means = vec![0.0; rows.len()];
            let mut vars = vec![0.0; rows.len()];
            for _ in 0..BOOTSTRAP_RETRY_CAP {
                draw_indices(&mut rng, q, m, &mut idx);
                for (j, row) in rows.iter().enumerate() {
                    for (s, &k) in sample.iter_mut().zip(&idx) {
                        *s = row[k];
                    }
                    (means[j], vars[j]) = series_moments(&sample);
                }
                if let Ok(fit) = fit_moments(pairs, &means, &vars, min_mean) {
                    return Some(fit.alpha);
                }
            }
            None
        })
        .collect();

    let values: Vec<f64> = alphas.iter().flatten().copied().collect();
    let failed = replicates - values.len();
    if failed as f64 > BOOTSTRAP_FAILURE_BUDGET * replicates as f64 {
        return Err(Error::BootstrapDegenerate {
            failed,
            total: replicates,
        });
    }
    Ok(BootstrapResult::from_values(&values, m, seed, failed))
}

/// Bootstrap of a single series' mean and standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentBootstrap {
    pub mean: BootstrapResult,
    pub sd: BootstrapResult,
}

/// Resamples all Q bins with replacement `replicates` times and bootstraps
/// the sample mean and the (1/Q) sample standard deviation.
pub fn bootstrap_moments(series: &[f64], replicates: usize, seed: u64) -> Result<MomentBootstrap> {
    let q = series.len();
    if replicates == 0 {
        return Err(Error::Config("bootstrap needs at least one replicate".into()));
    }
    if q < 2 {
        return Err(Error::InsufficientData { usable: q });
    }
    let stats: Vec<(f64, f64)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let mut idx = Vec::with_capacity(q);
            draw_indices(&mut rng, q, q, &mut idx);
            let sample: Vec<f64> = idx.iter().map(|&k| series[k]).collect();
            let (mean, var) = series_moments(&sample);
            (mean, var.sqrt())
        })
        .collect();
    let (means, sds): (Vec<f64>, Vec<f64>) = stats.into_iter().unzip();
    Ok(MomentBootstrap {
        mean: BootstrapResult::from_values(&means, q, seed, 0),
        sd: BootstrapResult::from_values(&sds, q, seed, 0),
    })
}

/// Fit report: the fit plus an optional bootstrap block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub fit: ScalingFit,
    pub bootstrap: Option<BootstrapResult>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tickdata::EventKind;
    use crate::time::{parse_ts, TimeSpan};

    fn panel(rows: Vec<Vec<u64>>) -> ActivityPanel {
        let codes = ["EUR/USD", "USD/JPY", "GBP/USD", "AUD/USD", "USD/CHF", "EUR/JPY"];
        let q = rows[0].len();
        let t0 = parse_ts("2008-08-03T00:00:00Z").unwrap();
        ActivityPanel::from_rows(
            EventKind::Quote,
            1,
            TimeSpan::from_minutes(t0, q as i64).unwrap(),
            codes[..rows.len()].iter().map(|c| c.parse().unwrap()).collect(),
            rows,
        )
        .unwrap()
    }

    fn alternating(mu: u64, dev: u64, q: usize) -> Vec<u64> {
        (0..q).map(|k| if k % 2 == 0 { mu + dev } else { mu - dev }).collect()
    }

    #[test]
    fn exact_square_root_law() {
        let rows = [4u64, 16, 64, 256]
            .iter()
            .map(|&mu| alternating(mu, (mu as f64).sqrt() as u64, 10))
            .collect();
        let fit = fit_scaling(&panel(rows), 0.0).unwrap();
        assert!((fit.alpha - 0.5).abs() < 1e-12, "{}", fit.alpha);
        assert!((fit.prefactor - 1.0).abs() < 1e-12);
        assert!(fit.normr < 1e-12);
        assert_eq!(fit.n_used, 4);
    }

    #[test]
    fn exact_linear_law() {
        let rows = [4u64, 16, 64, 256].iter().map(|&mu| alternating(mu, mu, 10)).collect();
        let fit = fit_scaling(&panel(rows), 0.0).unwrap();
        assert!((fit.alpha - 1.0).abs() < 1e-12);
        assert!((fit.prefactor - 1.0).abs() < 1e-12);
        assert!(fit.normr < 1e-12);
    }

    #[test]
    fn zero_rows_are_excluded_with_reasons() {
        let p = panel(vec![
            alternating(4, 2, 6),
            vec![0; 6],
            vec![5; 6],
            alternating(16, 4, 6),
        ]);
        let fit = fit_scaling(&p, 0.0).unwrap();
        assert_eq!(fit.n_used, 2);
        assert_eq!(fit.excluded.len(), 2);
        assert_eq!(fit.excluded[0].pair.as_str(), "USD/JPY");
        assert!(fit.excluded[0].reason.contains("mean"));
        assert_eq!(fit.excluded[1].reason, "zero variance");

        let strict = fit_scaling(&p, 5.0).unwrap_err();
        assert!(matches!(strict, Error::InsufficientData { usable: 1 }));
    }

    #[test]
    fn equal_means_are_degenerate() {
        let p = panel(vec![alternating(8, 2, 6), alternating(8, 3, 6)]);
        assert!(matches!(fit_scaling(&p, 0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn normr_grows_when_one_variance_is_inflated() {
        let pairs: Vec<Pair> = ["EUR/USD", "USD/JPY", "GBP/USD", "AUD/USD"]
            .iter()
            .map(|c| c.parse().unwrap())
            .collect();
        let means = [4.0, 16.0, 64.0, 256.0];
        let vars = [4.2, 15.1, 70.0, 250.0];
        let base = fit_moments(&pairs, &means, &vars, 0.0).unwrap();
        let mut bumped = vars;
        bumped[1] *= std::f64::consts::E.powi(2);
        let worse = fit_moments(&pairs, &means, &bumped, 0.0).unwrap();
        assert!(worse.normr > base.normr);
    }

    #[test]
    fn bootstrap_is_deterministic() {
        let rows = [4u64, 16, 64, 256]
            .iter()
            .enumerate()
            .map(|(i, &mu)| (0..40).map(|k| mu + ((k * 7 + i * 3) % 5) as u64 * (i as u64 + 1)).collect())
            .collect();
        let p = panel(rows);
        let a = bootstrap_scaling(&p, 50, 20, 11, 0.0).unwrap();
        let b = bootstrap_scaling(&p, 50, 20, 11, 0.0).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_replicates, 50);
        assert_eq!(a.points_per_replicate, 20);
        let c = bootstrap_scaling(&p, 50, 20, 12, 0.0).unwrap();
        assert_ne!(a.estimate_mean, c.estimate_mean);

        let single = bootstrap_scaling(&p, 1, 20, 11, 0.0).unwrap();
        assert_eq!(single.estimate_sd, 0.0);
    }

    #[test]
    fn bootstrap_argument_checks() {
        let p = panel(vec![alternating(4, 2, 6), alternating(16, 4, 6)]);
        assert!(bootstrap_scaling(&p, 0, 4, 1, 0.0).is_err());
        assert!(bootstrap_scaling(&p, 10, 1, 1, 0.0).is_err());
        assert!(bootstrap_scaling(&p, 10, 7, 1, 0.0).is_err());
    }

    #[test]
    fn bootstrap_failure_budget() {
        // One informative pair: every replicate fails.
        let p = panel(vec![alternating(4, 2, 6), vec![0; 6]]);
        assert!(matches!(
            bootstrap_scaling(&p, 20, 4, 1, 0.0),
            Err(Error::BootstrapDegenerate { failed: 20, total: 20 })
        ));
    }

    #[test]
    fn moment_bootstrap_constant_series() {
        let b = bootstrap_moments(&[3.0; 12], 100, 5).unwrap();
        assert_eq!(b.mean.estimate_sd, 0.0);
        assert_eq!(b.sd.estimate_sd, 0.0);
        assert_eq!(b.mean.estimate_mean, 3.0);
        assert_eq!(b, bootstrap_moments(&[3.0; 12], 100, 5).unwrap());
        assert!(bootstrap_moments(&[1.0], 10, 5).is_err());
    }

    #[test]
    fn report_schema() {
        let rows = [4u64, 16, 64, 256].iter().map(|&mu| alternating(mu, mu, 4)).collect();
        let fit = fit_scaling(&panel(rows), 0.0).unwrap();
        let report = FitReport {
            fit,
            bootstrap: Some(BootstrapResult::from_values(&[1.0, 1.0], 4, 9, 0)),
        };
        let v = serde_json::to_value(&report).unwrap();
        for key in ["alpha", "A", "normr", "n_used", "excluded", "points", "bootstrap"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["points"][0].as_array().unwrap().len(), 2);
        for key in ["mean", "sd", "B", "m", "seed"] {
            assert!(v["bootstrap"].get(key).is_some(), "missing bootstrap.{key}");
        }
    }
}
