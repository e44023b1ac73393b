//! Fluctuation scaling and cross-correlation analytics for market activity
//! count series.
//!
//! The pipeline runs from raw tick events to weekly reports:
//!
//! 1. [`tickdata`] parses tick CSV into a time-ordered [`TickStream`].
//! 2. [`panel`] counts events per pair and bin into [`ActivityPanel`]s and
//!    plans whole-week analysis windows.
//! 3. [`moments`] computes lagged covariances, correlation matrices and
//!    their global averages.
//! 4. [`scaling`] fits `Var = A · Mean^{2α}` across pairs, reports the
//!    residual norm, and bootstraps α.
//! 5. [`studies`] runs the bin-width sweep, the quote/trade lag profile and
//!    the rolling weekly study with its α versus ⟨C⟩ regression.
//!
//! [`synthgen`] produces doubly stochastic Poisson panels and tick streams
//! with closed-form moments for checking every estimator.

pub mod cli;
pub mod error;
pub mod moments;
pub mod panel;
pub mod regression;
pub mod rng;
pub mod scaling;
pub mod studies;
pub mod synthgen;
pub mod tickdata;
pub mod time;

pub use error::{Error, ErrorClass, Result};
pub use moments::{corr_matrix, global_avg_corr, lagged_cov, mean, pd_corr, CorrSummary, LaggedCov, Normalization, PdCorrSummary};
pub use panel::{bin_both, bin_counts, plan_weeks, rebin, ActivityPanel, WeekAnchor, WindowPlan};
pub use scaling::{bootstrap_moments, bootstrap_scaling, fit_scaling, BootstrapResult, ScalingFit};
pub use studies::{alpha_corr_regression, dt_sweep, pd_lag_profile, rolling_weekly, LagProfile, RegressionResult, RollingConfig, RollingReport, SweepCurve};
pub use synthgen::{analytic_moments, gen_panel, gen_panel_at, gen_tick_stream, GenSpec};
pub use tickdata::{filter_pairs, parse_tick_file, parse_tick_str, EventKind, OrderPolicy, Pair, TickEvent, TickStream};
pub use time::{TimeSpan, Timestamp};
