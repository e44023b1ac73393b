//! Temporal means, lagged covariances and correlation matrices.
//!
//! For series `x`, `y` of length Q and lag τ the covariance is
//!
//! ```text
//! τ ≥ 0:  Cov(x, y)(τ) = 1/(Q−τ) Σ_{k=0}^{Q−τ−1} (x(k) − ⟨x⟩)(y(k+τ) − ⟨y⟩)
//! τ < 0:  Cov(x, y)(τ) = 1/(Q+τ) Σ_{k=0}^{Q+τ−1} (x(k−τ) − ⟨x⟩)(y(k) − ⟨y⟩)
//! ```
//!
//! with full-series means ⟨·⟩ in both branches and no Bessel correction.
//! Sums run in ascending `k`, so `Cov(x, y)(τ) == Cov(y, x)(−τ)` holds
//! bit for bit.
//!
//! Correlation entries divide by the square root of a product of own-pair
//! covariances. Entries whose radicand is not strictly positive are
//! undefined (`None`) and are left out of global averages; the fraction of
//! defined entries is reported alongside every average.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::ActivityPanel;
use crate::tickdata::Pair;

/// Arithmetic mean of a non-empty series.
pub fn mean(series: &[f64]) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(series.iter().sum::<f64>() / series.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaggedCov {
    pub value: f64,
    pub tau: isize,
    /// Q − |τ|.
    pub terms: usize,
}

fn check_lag(tau: isize, len: usize) -> Result<()> {
    if len == 0 {
        return Err(Error::EmptySeries);
    }
    if tau.unsigned_abs() >= len {
        return Err(Error::LagDomain { tau, len });
    }
    Ok(())
}

/// Lagged covariance of two equal-length series.
pub fn lagged_cov(x: &[f64], y: &[f64], tau: isize) -> Result<LaggedCov> {
    if x.len() != y.len() {
        return Err(Error::Geometry(format!(
            "series lengths differ: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    check_lag(tau, x.len())?;
    let dx = deviations(x)?;
    let dy = deviations(y)?;
    Ok(LaggedCov {
        value: centered_cov(&dx, &dy, tau),
        tau,
        terms: x.len() - tau.unsigned_abs(),
    })
}

pub(crate) fn deviations(x: &[f64]) -> Result<Vec<f64>> {
    let m = mean(x)?;
    Ok(x.iter().map(|v| v - m).collect())
}

/// Covariance of already-centered series; `|tau| < len` is the caller's job.
pub(crate) fn centered_cov(dx: &[f64], dy: &[f64], tau: isize) -> f64 {
    let q = dx.len();
    let lag = tau.unsigned_abs();
    let n = q - lag;
    let sum: f64 = if tau >= 0 {
        dx[..n].iter().zip(&dy[lag..]).map(|(a, b)| a * b).sum()
    } else {
        dx[lag..].iter().zip(&dy[..n]).map(|(a, b)| a * b).sum()
    };
    sum / n as f64
}

/// Which lag the own-pair covariances in a correlation denominator use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Denominator evaluated at the same lag τ as the numerator.
    #[default]
    AtLag,
    /// Denominator pinned at τ = 0, so every lag shares one normalization.
    LagZero,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lag" | "at-lag" | "at_lag" => Ok(Normalization::AtLag),
            "lag0" | "lag-zero" | "lag_zero" => Ok(Normalization::LagZero),
            other => Err(Error::Config(format!(
                "normalization must be `lag` or `lag0`, got {other:?}"
            ))),
        }
    }
}

fn ratio(num: f64, radicand: f64) -> Option<f64> {
    (radicand > 0.0 && radicand.is_finite()).then(|| num / radicand.sqrt())
}

/// Correlation matrix of one panel at lag τ plus its global average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrSummary {
    pub tau: isize,
    pub pairs: Vec<Pair>,
    /// `matrix[i][j]` correlates row `i` with row `j` shifted by τ.
    pub matrix: Vec<Vec<Option<f64>>>,
    /// Mean of the defined entries above the diagonal.
    pub global_avg: f64,
    /// Defined fraction of the N(N−1)/2 entries above the diagonal.
    pub defined_fraction: f64,
    pub normalization: Normalization,
}

/// Cross-correlation matrix between quote and trade panels at lag τ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdCorrSummary {
    pub tau: isize,
    pub pairs: Vec<Pair>,
    /// `matrix[i][j]` correlates quotes of pair `i` with trades of pair `j`.
    pub matrix: Vec<Vec<Option<f64>>>,
    /// Mean over the defined entries of all N² cells.
    pub global_avg: f64,
    /// Defined fraction of all N² entries.
    pub defined_fraction: f64,
    pub normalization: Normalization,
}

/// Panel rows with their means subtracted, reusable across lags.
#[derive(Debug, Clone)]
pub struct CenteredPanel {
    pairs: Vec<Pair>,
    rows: Vec<Vec<f64>>,
}

impl CenteredPanel {
    pub fn new(panel: &ActivityPanel) -> Self {
        let rows = (0..panel.n_pairs())
            .map(|j| deviations(&panel.row_f64(j)).expect("panels have Q >= 2"))
            .collect();
        CenteredPanel {
            pairs: panel.pairs().to_vec(),
            rows,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn cov(&self, other: &CenteredPanel, i: usize, j: usize, tau: isize) -> f64 {
        centered_cov(&self.rows[i], &other.rows[j], tau)
    }
}

/// Correlation matrix of `panel` at lag τ.
pub fn corr_matrix(panel: &ActivityPanel, tau: isize, norm: Normalization) -> Result<CorrSummary> {
    let centered = CenteredPanel::new(panel);
    corr_matrix_centered(&centered, tau, norm)
}

pub fn corr_matrix_centered(x: &CenteredPanel, tau: isize, norm: Normalization) -> Result<CorrSummary> {
    let n = x.pairs.len();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "correlation matrix needs at least 2 pairs, got {n}"
        )));
    }
    check_lag(tau, x.n_bins())?;
    let denom_tau = match norm {
        Normalization::AtLag => tau,
        Normalization::LagZero => 0,
    };
    let own: Vec<f64> = (0..n).map(|i| x.cov(x, i, i, denom_tau)).collect();
    let matrix: Vec<Vec<Option<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| ratio(x.cov(x, i, j, tau), own[i] * own[j]))
                .collect()
        })
        .collect();

    let upper: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| matrix[i][j])
        .collect();
    if upper.is_empty() {
        return Err(Error::Degenerate(
            "every off-diagonal correlation is undefined".into(),
        ));
    }
    let slots = n * (n - 1) / 2;
    Ok(CorrSummary {
        tau,
        pairs: x.pairs.clone(),
        global_avg: upper.iter().sum::<f64>() / upper.len() as f64,
        defined_fraction: upper.len() as f64 / slots as f64,
        matrix,
        normalization: norm,
    })
}

/// Global average of simultaneous cross-correlations,
/// `2/(N(N−1)) Σ_{i<j} C_ij(0)`, over the defined entries.
pub fn global_avg_corr(summary: &CorrSummary) -> Result<f64> {
    if summary.tau != 0 {
        return Err(Error::LagDomain {
            tau: summary.tau,
            len: summary.pairs.len(),
        });
    }
    let n = summary.matrix.len();
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if let Some(c) = summary.matrix[i][j] {
                sum += c;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::Degenerate("no defined off-diagonal entries".into()));
    }
    Ok(sum / count as f64)
}

/// Quote-versus-trade cross-correlation matrix at lag τ:
/// `Cov(P_i, D_j)(τ) / sqrt(Cov(P_i, D_i)(τ') · Cov(P_j, D_j)(τ'))` where
/// τ' is τ under [`Normalization::AtLag`] and 0 under
/// [`Normalization::LagZero`].
pub fn pd_corr(
    p_panel: &ActivityPanel,
    d_panel: &ActivityPanel,
    tau: isize,
    norm: Normalization,
) -> Result<PdCorrSummary> {
    if !p_panel.same_geometry(d_panel) {
        return Err(Error::Geometry(
            "quote and trade panels differ in pairs, bin width or window".into(),
        ));
    }
    let p = CenteredPanel::new(p_panel);
    let d = CenteredPanel::new(d_panel);
    pd_corr_centered(&p, &d, tau, norm)
}

pub fn pd_corr_centered(
    p: &CenteredPanel,
    d: &CenteredPanel,
    tau: isize,
    norm: Normalization,
) -> Result<PdCorrSummary> {
    let n = p.pairs.len();
    check_lag(tau, p.n_bins())?;
    let denom_tau = match norm {
        Normalization::AtLag => tau,
        Normalization::LagZero => 0,
    };
    let own: Vec<f64> = (0..n).map(|i| p.cov(d, i, i, denom_tau)).collect();
    let matrix: Vec<Vec<Option<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| ratio(p.cov(d, i, j, tau), own[i] * own[j]))
                .collect()
        })
        .collect();
    let defined: Vec<f64> = matrix.iter().flatten().filter_map(|c| *c).collect();
    if defined.is_empty() {
        return Err(Error::Degenerate(format!(
            "every quote/trade cross-correlation is undefined at lag {tau}"
        )));
    }
    Ok(PdCorrSummary {
        tau,
        pairs: p.pairs.clone(),
        global_avg: defined.iter().sum::<f64>() / defined.len() as f64,
        defined_fraction: defined.len() as f64 / (n * n) as f64,
        matrix,
        normalization: norm,
    })
}

/// N×N matrix as CSV with pair-code headers; undefined cells are empty.
pub fn matrix_to_csv(pairs: &[Pair], matrix: &[Vec<Option<f64>>]) -> String {
    let mut out = String::from("pair");
    for p in pairs {
        let _ = write!(out, ",{p}");
    }
    out.push('\n');
    for (p, row) in pairs.iter().zip(matrix) {
        let _ = write!(out, "{p}");
        for c in row {
            match c {
                Some(v) => {
                    let _ = write!(out, ",{v}");
                }
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

impl CorrSummary {
    pub fn to_csv(&self) -> String {
        matrix_to_csv(&self.pairs, &self.matrix)
    }
}

impl PdCorrSummary {
    pub fn to_csv(&self) -> String {
        matrix_to_csv(&self.pairs, &self.matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tickdata::EventKind;
    use crate::time::{parse_ts, TimeSpan};

    fn panel(rows: Vec<Vec<u64>>) -> ActivityPanel {
        let codes = ["EUR/USD", "USD/JPY", "GBP/USD", "AUD/USD", "USD/CHF"];
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

    #[test]
    fn mean_examples() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(mean(&[7.0; 10]).unwrap(), 7.0);
        assert!(matches!(mean(&[]), Err(Error::EmptySeries)));
    }

    #[test]
    fn lagged_cov_hand_values() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let c0 = lagged_cov(&x, &x, 0).unwrap();
        assert_eq!(c0.value, 1.25);
        assert_eq!(c0.terms, 4);
        let c1 = lagged_cov(&x, &x, 1).unwrap();
        assert!((c1.value - 5.0 / 12.0).abs() < 1e-15);
        assert_eq!(c1.terms, 3);
        let cm1 = lagged_cov(&x, &x, -1).unwrap();
        assert_eq!(cm1.value, c1.value);
    }

    #[test]
    fn constant_partner_gives_zero() {
        let x = [3.0, 1.0, 4.0, 1.0, 5.0];
        let y = [2.0; 5];
        for tau in -4..=4 {
            assert_eq!(lagged_cov(&x, &y, tau).unwrap().value, 0.0);
        }
    }

    #[test]
    fn lag_domain() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(lagged_cov(&x, &x, 3), Err(Error::LagDomain { .. })));
        assert!(matches!(lagged_cov(&x, &x, -3), Err(Error::LagDomain { .. })));
        assert!(lagged_cov(&x, &x[..2], 0).is_err());
    }

    #[test]
    fn identical_and_anti_aligned_rows() {
        let row = vec![1, 5, 2, 8, 3];
        let same = corr_matrix(&panel(vec![row.clone(), row.clone()]), 0, Normalization::AtLag).unwrap();
        assert_eq!(same.matrix[0][1], Some(1.0));
        assert_eq!(same.global_avg, 1.0);
        assert_eq!(same.matrix[0][0], Some(1.0));

        let anti: Vec<u64> = row.iter().map(|v| 10 - v).collect();
        let opp = corr_matrix(&panel(vec![row, anti]), 0, Normalization::AtLag).unwrap();
        assert!((opp.matrix[0][1].unwrap() + 1.0).abs() < 1e-15);
        assert!((global_avg_corr(&opp).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_rows_are_undefined_not_poisonous() {
        let p = panel(vec![vec![1, 5, 2, 8], vec![3, 3, 3, 3], vec![2, 6, 1, 9]]);
        let c = corr_matrix(&p, 0, Normalization::AtLag).unwrap();
        assert_eq!(c.matrix[0][1], None);
        assert_eq!(c.matrix[1][1], None);
        assert!((c.defined_fraction - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(c.global_avg, c.matrix[0][2].unwrap());

        let flat = panel(vec![vec![3, 3, 3], vec![0, 0, 0]]);
        assert!(matches!(
            corr_matrix(&flat, 0, Normalization::AtLag),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn needs_two_pairs() {
        assert!(corr_matrix(&panel(vec![vec![1, 2, 3]]), 0, Normalization::AtLag).is_err());
    }

    #[test]
    fn pd_reduces_to_corr_when_panels_match() {
        let p = panel(vec![vec![1, 5, 2, 8, 3, 0], vec![2, 4, 4, 9, 1, 1], vec![0, 7, 3, 3, 2, 5]]);
        let c = corr_matrix(&p, 0, Normalization::AtLag).unwrap();
        let pd = pd_corr(&p, &p, 0, Normalization::AtLag).unwrap();
        assert_eq!(pd.matrix, c.matrix);
        for i in 0..3 {
            assert_eq!(pd.matrix[i][i], Some(1.0));
        }
    }

    #[test]
    fn pd_geometry_mismatch() {
        let p = panel(vec![vec![1, 2, 3], vec![3, 1, 2]]);
        let d = panel(vec![vec![1, 2, 3, 4], vec![3, 1, 2, 0]]);
        assert!(matches!(
            pd_corr(&p, &d, 0, Normalization::LagZero),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn global_avg_requires_lag_zero() {
        let p = panel(vec![vec![1, 5, 2, 8, 3], vec![2, 4, 4, 9, 1]]);
        let c = corr_matrix(&p, 1, Normalization::LagZero).unwrap();
        assert!(global_avg_corr(&c).is_err());
    }

    #[test]
    fn csv_has_blank_undefined_cells() {
        let p = panel(vec![vec![1, 5, 2, 8], vec![3, 3, 3, 3], vec![1, 5, 2, 8]]);
        let csv = corr_matrix(&p, 0, Normalization::AtLag).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "pair,EUR/USD,USD/JPY,GBP/USD");
        assert_eq!(lines[1], "EUR/USD,1,,1");
        assert_eq!(lines[2], "USD/JPY,,,");
    }
}
