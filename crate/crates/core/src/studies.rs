//! Multi-step studies built from the panel, moment and scaling primitives:
//! the bin-width sweep, the quote/trade lag profile, the rolling weekly
//! report, and the regression of ⟨C⟩ on α across weeks.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{corr_matrix, pd_corr_centered, CenteredPanel, CorrSummary, Normalization};
use crate::panel::{bin_both, bin_counts, rebin, ActivityPanel, WindowPlan};
use crate::regression::{ols, pearson};
use crate::scaling::{bootstrap_scaling, fit_scaling, BootstrapResult, ScalingFit};
use crate::tickdata::{EventKind, Pair, TickStream};
use crate::time::TimeSpan;

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

// ---------------------------------------------------------------------------
// Bin-width sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dt: u32,
    pub alpha: Option<f64>,
    pub global_corr: Option<f64>,
    pub normr: Option<f64>,
    /// Reasons a statistic is missing at this bin width.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub kind: EventKind,
    pub rows: Vec<SweepRow>,
}

impl SweepCurve {
    /// `dt,alpha,global_corr,normr`; undefined cells are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dt,alpha,global_corr,normr\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.dt,
                opt(r.alpha),
                opt(r.global_corr),
                opt(r.normr)
            );
        }
        out
    }
}

/// Rebins `base` to every width in `dt_list` and records α, normr and the
/// simultaneous global average correlation at each.
///
/// Widths are sorted; duplicates, zero, and widths that are not a multiple
/// of the base width or do not divide the window are errors. A fit or
/// correlation that fails at some width yields a flagged row instead.
pub fn dt_sweep(base: &ActivityPanel, dt_list: &[u32], min_mean: f64) -> Result<SweepCurve> {
    let mut dts = dt_list.to_vec();
    dts.sort_unstable();
    if dts.is_empty() {
        return Err(Error::Config("bin width list is empty".into()));
    }
    if let Some(w) = dts.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("bin width {} listed twice", w[0])));
    }
    let panels = dts
        .iter()
        .map(|&dt| rebin(base, dt))
        .collect::<Result<Vec<_>>>()?;
    let rows = panels
        .par_iter()
        .map(|panel| {
            let mut flags = Vec::new();
            let fit = fit_scaling(panel, min_mean)
                .map_err(|e| flags.push(format!("fit: {e}")))
                .ok();
            let corr = corr_matrix(panel, 0, Normalization::AtLag)
                .map_err(|e| flags.push(format!("corr: {e}")))
                .ok();
            SweepRow {
                dt: panel.dt_minutes(),
                alpha: fit.as_ref().map(|f| f.alpha),
                normr: fit.as_ref().map(|f| f.normr),
                global_corr: corr.map(|c| c.global_avg),
                flags,
            }
        })
        .collect();
    Ok(SweepCurve {
        kind: base.kind(),
        rows,
    })
}

/// Bins `stream` at one minute over `window` and sweeps `dt_list`.
pub fn dt_sweep_stream(
    stream: &TickStream,
    kind: EventKind,
    window: TimeSpan,
    pairs: &[Pair],
    dt_list: &[u32],
    min_mean: f64,
) -> Result<SweepCurve> {
    let base = bin_counts(stream, kind, 1, window, pairs)?;
    dt_sweep(&base, dt_list, min_mean)
}

// ---------------------------------------------------------------------------
// Quote/trade lag profile

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagRow {
    pub tau: isize,
    pub global_avg: Option<f64>,
    pub defined_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagProfile {
    pub rows: Vec<LagRow>,
    /// Lag of the largest defined global average; the smallest such lag on
    /// ties.
    pub argmax: Option<isize>,
    pub normalization: Normalization,
}

impl LagProfile {
    /// `tau,global_avg`; undefined cells are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,global_avg\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{}", r.tau, opt(r.global_avg));
        }
        out
    }
}

/// Global average quote/trade cross-correlation for each lag in
/// `tau_min..=tau_max`.
pub fn pd_lag_profile(
    p_panel: &ActivityPanel,
    d_panel: &ActivityPanel,
    tau_min: isize,
    tau_max: isize,
    norm: Normalization,
) -> Result<LagProfile> {
    if !p_panel.same_geometry(d_panel) {
        return Err(Error::Geometry(
            "quote and trade panels differ in pairs, bin width or window".into(),
        ));
    }
    if tau_min > tau_max {
        return Err(Error::Config(format!(
            "lag range {tau_min}..={tau_max} is empty"
        )));
    }
    let q = p_panel.n_bins();
    for tau in [tau_min, tau_max] {
        if tau.unsigned_abs() >= q {
            return Err(Error::LagDomain { tau, len: q });
        }
    }
    let p = CenteredPanel::new(p_panel);
    let d = CenteredPanel::new(d_panel);
    let rows: Vec<LagRow> = (tau_min..=tau_max)
        .into_par_iter()
        .map(|tau| match pd_corr_centered(&p, &d, tau, norm) {
            Ok(s) => LagRow {
                tau,
                global_avg: Some(s.global_avg),
                defined_fraction: s.defined_fraction,
                flag: None,
            },
            Err(e) => LagRow {
                tau,
                global_avg: None,
                defined_fraction: 0.0,
                flag: Some(e.to_string()),
            },
        })
        .collect();
    let mut argmax: Option<(isize, f64)> = None;
    for r in &rows {
        if let Some(g) = r.global_avg {
            if argmax.is_none_or(|(_, best)| g > best) {
                argmax = Some((r.tau, g));
            }
        }
    }
    Ok(LagProfile {
        rows,
        argmax: argmax.map(|(t, _)| t),
        normalization: norm,
    })
}

// ---------------------------------------------------------------------------
// Rolling weekly study

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingConfig {
    pub dt_minutes: u32,
    #[serde(rename = "B")]
    pub replicates: usize,
    pub m: usize,
    pub min_mean: f64,
    pub seed: u64,
    /// Pairs to analyse; `None` means every pair seen in the stream.
    pub pairs: Option<Vec<Pair>>,
    /// Width, in weeks, of the centred window for the scaling-break rule.
    pub break_window: usize,
    /// A week is flagged when normr exceeds the window median by this many
    /// median absolute deviations.
    pub break_k: f64,
}

impl Default for RollingConfig {
    fn default() -> Self {
        RollingConfig {
            dt_minutes: 1,
            replicates: 1000,
            m: 100,
            min_mean: 0.0,
            seed: 0,
            pairs: None,
            break_window: 9,
            break_k: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeekRow {
    pub label: String,
    pub window: TimeSpan,
    #[serde(rename = "fit_P")]
    pub fit_p: Option<ScalingFit>,
    #[serde(rename = "fit_D")]
    pub fit_d: Option<ScalingFit>,
    #[serde(rename = "corr_P")]
    pub corr_p: Option<CorrSummary>,
    #[serde(rename = "corr_D")]
    pub corr_d: Option<CorrSummary>,
    /// Global average quote/trade cross-correlation at lag 0.
    pub pd_global: Option<f64>,
    #[serde(rename = "bootstrap_P")]
    pub bootstrap_p: Option<BootstrapResult>,
    #[serde(rename = "bootstrap_D")]
    pub bootstrap_d: Option<BootstrapResult>,
    pub flags: Vec<String>,
}

impl WeekRow {
    pub fn fit(&self, kind: EventKind) -> Option<&ScalingFit> {
        match kind {
            EventKind::Quote => self.fit_p.as_ref(),
            EventKind::Trade => self.fit_d.as_ref(),
        }
    }

    pub fn corr(&self, kind: EventKind) -> Option<&CorrSummary> {
        match kind {
            EventKind::Quote => self.corr_p.as_ref(),
            EventKind::Trade => self.corr_d.as_ref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RollingReport {
    pub pairs: Vec<Pair>,
    pub weeks: Vec<WeekRow>,
}

pub const CSV_HEADER: &str =
    "week_label,alpha_P,alpha_P_sd,normr_P,alpha_D,alpha_D_sd,normr_D,avgcorr_P,avgcorr_D,pd0,flags";

impl RollingReport {
    /// One JSON object per week, newline-terminated.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for w in &self.weeks {
            out.push_str(&serde_json::to_string(w)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Flat per-week table; flags are `;`-separated.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for w in &self.weeks {
            let flags = w.flags.join(";").replace(',', " ");
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                w.label,
                opt(w.fit_p.as_ref().map(|f| f.alpha)),
                opt(w.bootstrap_p.as_ref().map(|b| b.estimate_sd)),
                opt(w.fit_p.as_ref().map(|f| f.normr)),
                opt(w.fit_d.as_ref().map(|f| f.alpha)),
                opt(w.bootstrap_d.as_ref().map(|b| b.estimate_sd)),
                opt(w.fit_d.as_ref().map(|f| f.normr)),
                opt(w.corr_p.as_ref().map(|c| c.global_avg)),
                opt(w.corr_d.as_ref().map(|c| c.global_avg)),
                opt(w.pd_global),
                flags
            );
        }
        out
    }

    /// `(α_w, ⟨C⟩_w)` for the weeks where both are defined.
    pub fn regression_points(&self, kind: EventKind) -> Vec<(f64, f64)> {
        self.weeks
            .iter()
            .filter_map(|w| Some((w.fit(kind)?.alpha, w.corr(kind)?.global_avg)))
            .collect()
    }
}

/// Runs the per-week analysis for every window of `plan`.
///
/// Weeks are independent and run in parallel; rows come back in plan order.
/// A week whose window is not covered by the stream, or whose panels are
/// empty or degenerate, is kept as a row carrying flags.
pub fn rolling_weekly(stream: &TickStream, plan: &WindowPlan, cfg: &RollingConfig) -> Result<RollingReport> {
    if plan.is_empty() {
        return Err(Error::Config("window plan is empty".into()));
    }
    if cfg.replicates == 0 {
        return Err(Error::Config("bootstrap needs at least one replicate".into()));
    }
    let pairs: Vec<Pair> = match &cfg.pairs {
        Some(p) => p.clone(),
        None => stream.pair_universe().iter().copied().collect(),
    };
    if pairs.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut weeks: Vec<WeekRow> = plan
        .windows
        .par_iter()
        .map(|pw| week_row(stream, &pw.label, pw.window, &pairs, cfg))
        .collect();
    flag_breaks(&mut weeks, EventKind::Quote, cfg);
    flag_breaks(&mut weeks, EventKind::Trade, cfg);
    Ok(RollingReport { pairs, weeks })
}

struct KindStats {
    fit: Option<ScalingFit>,
    corr: Option<CorrSummary>,
    bootstrap: Option<BootstrapResult>,
}

fn kind_stats(panel: &ActivityPanel, cfg: &RollingConfig, flags: &mut Vec<String>) -> KindStats {
    let tag = panel.kind().series_label();
    if panel.is_empty() {
        flags.push(format!("empty_{tag}"));
        return KindStats {
            fit: None,
            corr: None,
            bootstrap: None,
        };
    }
    let fit = fit_scaling(panel, cfg.min_mean)
        .map_err(|e| flags.push(format!("fit_{tag}: {e}")))
        .ok();
    let corr = corr_matrix(panel, 0, Normalization::AtLag)
        .map_err(|e| flags.push(format!("corr_{tag}: {e}")))
        .ok();
    let bootstrap = if fit.is_some() {
        bootstrap_scaling(panel, cfg.replicates, cfg.m, cfg.seed, cfg.min_mean)
            .map_err(|e| flags.push(format!("bootstrap_{tag}: {e}")))
            .ok()
    } else {
        None
    };
    KindStats {
        fit,
        corr,
        bootstrap,
    }
}

fn week_row(stream: &TickStream, label: &str, window: TimeSpan, pairs: &[Pair], cfg: &RollingConfig) -> WeekRow {
    let mut row = WeekRow {
        label: label.to_string(),
        window,
        fit_p: None,
        fit_d: None,
        corr_p: None,
        corr_d: None,
        pd_global: None,
        bootstrap_p: None,
        bootstrap_d: None,
        flags: Vec::new(),
    };
    let (p, d) = match bin_both(stream, cfg.dt_minutes, window, pairs) {
        Ok(panels) => panels,
        Err(e) => {
            row.flags.push(format!("panel: {e}"));
            return row;
        }
    };
    let sp = kind_stats(&p, cfg, &mut row.flags);
    let sd = kind_stats(&d, cfg, &mut row.flags);
    if !p.is_empty() && !d.is_empty() {
        let (cp, cd) = (CenteredPanel::new(&p), CenteredPanel::new(&d));
        match pd_corr_centered(&cp, &cd, 0, Normalization::LagZero) {
            Ok(s) => row.pd_global = Some(s.global_avg),
            Err(e) => row.flags.push(format!("pd: {e}")),
        }
    }
    (row.fit_p, row.corr_p, row.bootstrap_p) = (sp.fit, sp.corr, sp.bootstrap);
    (row.fit_d, row.corr_d, row.bootstrap_d) = (sd.fit, sd.corr, sd.bootstrap);
    row
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Flags weeks whose normr exceeds the median of a centred window of
/// `break_window` defined weeks by more than `break_k` median absolute
/// deviations. Windows with fewer than five values never flag.
fn flag_breaks(weeks: &mut [WeekRow], kind: EventKind, cfg: &RollingConfig) {
    let series: Vec<(usize, f64)> = weeks
        .iter()
        .enumerate()
        .filter_map(|(i, w)| Some((i, w.fit(kind)?.normr)))
        .collect();
    let half = cfg.break_window / 2;
    for (pos, &(week, value)) in series.iter().enumerate() {
        let lo = pos.saturating_sub(half);
        let hi = (pos + half + 1).min(series.len());
        if hi - lo < 5 {
            continue;
        }
        let mut vals: Vec<f64> = series[lo..hi].iter().map(|s| s.1).collect();
        let med = median(&mut vals);
        let mut dev: Vec<f64> = vals.iter().map(|v| (v - med).abs()).collect();
        let mad = median(&mut dev);
        if value > med + cfg.break_k * mad {
            weeks[week]
                .flags
                .push(format!("scaling_break_{}", kind.series_label()));
        }
    }
}

// ---------------------------------------------------------------------------
// α versus ⟨C⟩ regression

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionResult {
    /// Slope of ⟨C⟩ on α.
    pub a: f64,
    pub b: f64,
    /// Root of the summed squared residuals.
    pub rms: f64,
    /// `None` when ⟨C⟩ has no spread.
    pub pearson_r: Option<f64>,
    pub n: usize,
}

/// Least-squares line `⟨C⟩ = a·α + b` through `(α, ⟨C⟩)` points.
pub fn alpha_corr_regression(points: &[(f64, f64)]) -> Result<RegressionResult> {
    let (x, y): (Vec<f64>, Vec<f64>) = points.iter().copied().unzip();
    let fit = ols(&x, &y)?;
    Ok(RegressionResult {
        a: fit.slope,
        b: fit.intercept,
        rms: fit.residual_norm,
        pearson_r: pearson(&x, &y),
        n: points.len(),
    })
}

/// Pairs present in `stream`, optionally restricted to `include`.
pub fn select_pairs(stream: &TickStream, include: Option<&BTreeSet<Pair>>) -> Result<Vec<Pair>> {
    let pairs: Vec<Pair> = match include {
        Some(inc) => stream.pair_universe().intersection(inc).copied().collect(),
        None => stream.pair_universe().iter().copied().collect(),
    };
    if pairs.is_empty() {
        return Err(Error::EmptySelection);
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthgen::{default_start, gen_panel, gen_tick_stream, GenSpec};
    use crate::time::MINUTES_PER_WEEK;

    fn synth(q: usize, v: f64, seed: u64) -> (ActivityPanel, ActivityPanel) {
        gen_panel(&GenSpec::log_spaced(6, 2.0, 50.0, q, seed).with_coupling(v, 0.9)).unwrap()
    }

    #[test]
    fn sweep_at_base_width_matches_direct() {
        let (p, _) = synth(600, 0.2, 1);
        let curve = dt_sweep(&p, &[1], 0.0).unwrap();
        let fit = fit_scaling(&p, 0.0).unwrap();
        let corr = corr_matrix(&p, 0, Normalization::AtLag).unwrap();
        assert_eq!(curve.rows.len(), 1);
        assert_eq!(curve.rows[0].alpha, Some(fit.alpha));
        assert_eq!(curve.rows[0].normr, Some(fit.normr));
        assert_eq!(curve.rows[0].global_corr, Some(corr.global_avg));
    }

    #[test]
    fn sweep_sorts_and_rejects_bad_widths() {
        let (p, _) = synth(600, 0.2, 1);
        let curve = dt_sweep(&p, &[15, 1, 5], 0.0).unwrap();
        let dts: Vec<u32> = curve.rows.iter().map(|r| r.dt).collect();
        assert_eq!(dts, [1, 5, 15]);
        assert!(curve.to_csv().starts_with("dt,alpha,global_corr,normr\n1,"));
        assert!(dt_sweep(&p, &[5, 5], 0.0).is_err());
        assert!(dt_sweep(&p, &[7], 0.0).is_err());
        assert!(dt_sweep(&p, &[], 0.0).is_err());
    }

    #[test]
    fn sweep_flags_degenerate_width() {
        // At dt = 300 only two bins remain; still fine. At dt = 600 geometry
        // fails (Q = 1), which is an error, not a flag.
        let (p, _) = synth(600, 0.2, 1);
        assert!(dt_sweep(&p, &[600], 0.0).is_err());
        let curve = dt_sweep(&p, &[300], 1e9).unwrap();
        assert!(curve.rows[0].alpha.is_none());
        assert!(!curve.rows[0].flags.is_empty());
        assert!(curve.rows[0].global_corr.is_some());
    }

    #[test]
    fn self_profile_peaks_at_zero_and_is_symmetric() {
        let (p, _) = synth(500, 0.3, 2);
        let prof = pd_lag_profile(&p, &p, -5, 5, Normalization::LagZero).unwrap();
        assert_eq!(prof.argmax, Some(0));
        let at0 = crate::moments::pd_corr(&p, &p, 0, Normalization::LagZero).unwrap();
        for i in 0..p.n_pairs() {
            assert!((at0.matrix[i][i].unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(prof.rows[5].global_avg, Some(at0.global_avg));
        for norm in [Normalization::LagZero, Normalization::AtLag] {
            let prof = pd_lag_profile(&p, &p, -5, 5, norm).unwrap();
            for k in 0..5 {
                let (a, b) = (prof.rows[k].global_avg, prof.rows[10 - k].global_avg);
                match (a, b) {
                    (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12 * a.abs().max(1.0)),
                    (a, b) => assert_eq!(a.is_none(), b.is_none()),
                }
            }
        }
        assert!(pd_lag_profile(&p, &p, -500, 0, Normalization::AtLag).is_err());
        assert!(pd_lag_profile(&p, &p, 1, 0, Normalization::AtLag).is_err());
    }

    #[test]
    fn regression_hand_case() {
        let r = alpha_corr_regression(&[(0.5, 0.1), (0.6, 0.2), (0.7, 0.3)]).unwrap();
        assert!((r.a - 1.0).abs() < 1e-12);
        assert!((r.b + 0.4).abs() < 1e-12);
        assert!(r.rms < 1e-12);
        assert!((r.pearson_r.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(r.n, 3);
        assert!(alpha_corr_regression(&[(0.5, 0.1)]).is_err());
        assert!(alpha_corr_regression(&[(0.5, 0.1), (0.5, 0.2)]).is_err());
    }

    #[test]
    fn rms_is_a_root_sum() {
        let pts = [(0.5, 0.1), (0.6, 0.25), (0.7, 0.3), (0.8, 0.5)];
        let once = alpha_corr_regression(&pts).unwrap();
        let doubled: Vec<_> = pts.iter().chain(pts.iter()).copied().collect();
        let twice = alpha_corr_regression(&doubled).unwrap();
        assert!((twice.a - once.a).abs() < 1e-12);
        assert!((twice.rms - once.rms * 2f64.sqrt()).abs() < 1e-12);
    }

    fn week_spec(v: f64, seed: u64) -> GenSpec {
        GenSpec::log_spaced(4, 0.5, 5.0, MINUTES_PER_WEEK as usize, seed).with_coupling(v, 0.5)
    }

    fn small_cfg() -> RollingConfig {
        RollingConfig {
            replicates: 20,
            m: 100,
            seed: 3,
            ..RollingConfig::default()
        }
    }

    #[test]
    fn one_week_report_matches_direct_computation() {
        let stream = gen_tick_stream(&week_spec(0.2, 4), default_start(), 1).unwrap();
        let window = TimeSpan::from_minutes(default_start(), MINUTES_PER_WEEK).unwrap();
        let plan = WindowPlan::single("2008-08-03", window);
        let cfg = small_cfg();
        let report = rolling_weekly(&stream, &plan, &cfg).unwrap();
        assert_eq!(report.weeks.len(), 1);
        let w = &report.weeks[0];

        let pairs: Vec<Pair> = stream.pair_universe().iter().copied().collect();
        let (p, d) = bin_both(&stream, 1, window, &pairs).unwrap();
        assert_eq!(p.n_bins(), 10_080);
        assert_eq!(w.fit_p.as_ref(), Some(&fit_scaling(&p, 0.0).unwrap()));
        assert_eq!(w.fit_d.as_ref(), Some(&fit_scaling(&d, 0.0).unwrap()));
        assert_eq!(w.corr_p.as_ref(), Some(&corr_matrix(&p, 0, Normalization::AtLag).unwrap()));
        assert_eq!(w.corr_d.as_ref(), Some(&corr_matrix(&d, 0, Normalization::AtLag).unwrap()));
        assert_eq!(
            w.bootstrap_p.as_ref(),
            Some(&bootstrap_scaling(&p, 20, 100, 3, 0.0).unwrap())
        );
        let pd = crate::moments::pd_corr(&p, &d, 0, Normalization::LagZero).unwrap();
        assert_eq!(w.pd_global, Some(pd.global_avg));
        assert!(w.flags.is_empty(), "{:?}", w.flags);
    }

    #[test]
    fn uncovered_window_is_flagged_not_fatal() {
        let stream = gen_tick_stream(&week_spec(0.2, 4), default_start(), 1).unwrap();
        let late = TimeSpan::from_minutes(
            default_start() + chrono::Duration::minutes(MINUTES_PER_WEEK),
            MINUTES_PER_WEEK,
        )
        .unwrap();
        let report = rolling_weekly(&stream, &WindowPlan::single("x", late), &small_cfg()).unwrap();
        let w = &report.weeks[0];
        assert!(w.fit_p.is_none() && w.pd_global.is_none());
        assert!(w.flags[0].starts_with("panel:"));
        let csv = report.to_csv();
        assert!(csv.starts_with(CSV_HEADER));
        assert_eq!(csv.lines().nth(1).unwrap().split(',').count(), 11);
    }

    #[test]
    fn break_rule_flags_an_outlier() {
        let mk = |normr: f64| WeekRow {
            label: String::new(),
            window: TimeSpan::from_minutes(default_start(), 1).unwrap(),
            fit_p: Some(ScalingFit {
                alpha: 0.5,
                prefactor: 1.0,
                normr,
                n_used: 2,
                excluded: vec![],
                points: vec![],
            }),
            fit_d: None,
            corr_p: None,
            corr_d: None,
            pd_global: None,
            bootstrap_p: None,
            bootstrap_d: None,
            flags: vec![],
        };
        let mut weeks: Vec<WeekRow> = [1.0, 1.1, 0.9, 1.0, 5.0, 1.05, 0.95, 1.0]
            .iter()
            .map(|&n| mk(n))
            .collect();
        flag_breaks(&mut weeks, EventKind::Quote, &RollingConfig::default());
        let flagged: Vec<usize> = (0..weeks.len()).filter(|&i| !weeks[i].flags.is_empty()).collect();
        assert_eq!(flagged, [4]);
        assert_eq!(weeks[4].flags, ["scaling_break_P"]);
    }
}
