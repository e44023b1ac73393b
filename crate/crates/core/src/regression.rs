//! Ordinary least squares on a line.

use crate::error::{Error, Result};

/// `y ≈ slope·x + intercept` with its residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Residuals in input order.
    pub residuals: Vec<f64>,
    /// Root of the sum of squared residuals.
    pub residual_norm: f64,
}

/// Fits `y` on `x`. Points are summed in sorted order so the result does not
/// depend on how the caller ordered them; residuals follow input order.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    assert_eq!(x.len(), y.len(), "ols: x and y lengths differ");
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData { usable: n });
    }
    let mut pts: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 || !sxx.is_finite() {
        return Err(Error::Degenerate("no spread in the regressor".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual_norm = pts
        .iter()
        .map(|(xi, yi)| {
            let r = yi - intercept - slope * xi;
            r * r
        })
        .sum::<f64>()
        .sqrt();
    let residuals = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| yi - intercept - slope * xi)
        .collect();
    Ok(LineFit {
        slope,
        intercept,
        residuals,
        residual_norm,
    })
}

/// Sample Pearson correlation; `None` when either series has no spread.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mut pts: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in &pts {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
