//! The `fxscale` command line.
//!
//! Every subcommand reads its inputs, computes, then writes each output
//! through a temporary file and a rename, followed by a run manifest at
//! `<out>.manifest.json` (config echo, input digests, version, wall time).
//!
//! Exit codes:
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success                                   |
//! | 2    | usage error (unknown flag, bad value)     |
//! | 3    | parse error in an input file              |
//! | 4    | geometry error (window, bin width, lag)   |
//! | 5    | degenerate data (no usable pairs, ...)    |
//! | 6    | I/O failure                               |
//! | 7    | invalid configuration or generator spec   |
//!
//! Defaults can be overridden through `FXSCALE_*` environment variables;
//! each flag's help text names its variable.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{Duration, DurationRound};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, ErrorClass, Result};
use crate::moments::{corr_matrix, Normalization};
use crate::panel::{
    bin_both, bin_counts, plan_weeks, read_panel_binary, read_panel_csv, write_panel_binary, write_panel_csv,
    ActivityPanel, PanelMeta, WeekAnchor,
};
use crate::scaling::{bootstrap_scaling, fit_scaling, FitReport};
use crate::studies::{alpha_corr_regression, dt_sweep, pd_lag_profile, rolling_weekly, RegressionResult, RollingConfig};
use crate::synthgen::{default_start, gen_tick_stream, GenSpec};
use crate::tickdata::{filter_pairs, parse_tick_str, EventKind, OrderPolicy, Pair, TickStream};
use crate::time::{format_ts, parse_ts, TimeSpan, Timestamp};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_GEOMETRY: i32 = 4;
pub const EXIT_DEGENERATE: i32 = 5;
pub const EXIT_IO: i32 = 6;
pub const EXIT_CONFIG: i32 = 7;

pub fn exit_code(class: ErrorClass) -> i32 {
    match class {
        ErrorClass::Parse => EXIT_PARSE,
        ErrorClass::Geometry => EXIT_GEOMETRY,
        ErrorClass::Degeneracy => EXIT_DEGENERATE,
        ErrorClass::Io => EXIT_IO,
        ErrorClass::Config => EXIT_CONFIG,
    }
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "fxscale", version, about = "Fluctuation scaling and cross-correlation analytics for tick activity")]
pub struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true, env = "FXSCALE_THREADS")]
    pub threads: Option<usize>,

    /// Suppress warnings on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Generate a synthetic tick file from a JSON generator spec.
    Synth(SynthArgs),
    /// Count one event kind per pair and bin into a panel file.
    Bin(BinArgs),
    /// Fit the scaling exponent of a panel, with a bootstrap error bar.
    Fit(FitArgs),
    /// Correlation matrix of a panel at one lag.
    Corr(CorrArgs),
    /// Quote/trade cross-correlation profile over a lag range.
    Pdlag(PdlagArgs),
    /// Scaling exponent and average correlation across bin widths.
    Sweep(SweepArgs),
    /// Weekly rolling report over a tick file.
    Rolling(RollingArgs),
    /// Regress average correlation on the scaling exponent across weeks.
    Regress(RegressArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KindArg {
    Quote,
    Trade,
}

impl From<KindArg> for EventKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Quote => EventKind::Quote,
            KindArg::Trade => EventKind::Trade,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum NormArg {
    /// Own-pair denominators at the same lag.
    Lag,
    /// Own-pair denominators at lag 0.
    Lag0,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Lag => Normalization::AtLag,
            NormArg::Lag0 => Normalization::LagZero,
        }
    }
}

/// Options shared by subcommands that read a tick file.
#[derive(Debug, Args, Serialize)]
pub struct TickInput {
    /// Tick CSV (`timestamp,pair,kind`).
    #[arg(long = "in", value_name = "TICKS")]
    pub input: PathBuf,
    /// Sort out-of-order events instead of rejecting the file.
    #[arg(long)]
    pub sort: bool,
    /// Comma-separated pair include-list.
    #[arg(long, value_delimiter = ',')]
    pub pairs: Option<Vec<String>>,
}

#[derive(Debug, Args, Serialize)]
pub struct WindowArgs {
    /// Window start (RFC 3339, UTC). Defaults to midnight of the first day.
    #[arg(long)]
    pub start: Option<String>,
    /// Window end, exclusive. Defaults to the largest whole number of bins
    /// inside the data's days.
    #[arg(long)]
    pub end: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Generator spec JSON (GenSpec fields plus optional `start`,
    /// `dt_minutes`).
    #[arg(long)]
    pub spec: PathBuf,
    /// Output tick CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write quote and trade panels to `<PREFIX>.P.csv` and
    /// `<PREFIX>.D.csv` with sidecars.
    #[arg(long, value_name = "PREFIX")]
    pub panels: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BinArgs {
    #[command(flatten)]
    pub ticks: TickInput,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, value_enum, default_value = "quote")]
    pub kind: KindArg,
    /// Bin width in minutes.
    #[arg(long, default_value_t = 1, env = "FXSCALE_DT")]
    pub dt: u32,
    /// Output panel: `.fxp` for the binary form, CSV (plus `<out>.json`
    /// sidecar) otherwise.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct BootstrapArgs {
    /// Bootstrap replicates.
    #[arg(long = "replicates", short = 'B', default_value_t = 1000, env = "FXSCALE_B")]
    pub replicates: usize,
    /// Bins drawn per replicate.
    #[arg(long, short = 'm', default_value_t = 100, env = "FXSCALE_M")]
    pub m: usize,
    #[arg(long, default_value_t = 0, env = "FXSCALE_SEED")]
    pub seed: u64,
    /// Pairs whose mean does not exceed this are left out of fits.
    #[arg(long, default_value_t = 0.0, env = "FXSCALE_MIN_MEAN")]
    pub min_mean: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Panel file (CSV with sidecar, or `.fxp`).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub boot: BootstrapArgs,
    /// Skip the bootstrap.
    #[arg(long)]
    pub no_bootstrap: bool,
    /// Fit report JSON.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrArgs {
    /// Panel file (CSV with sidecar, or `.fxp`).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub tau: isize,
    #[arg(long, value_enum, default_value = "lag")]
    pub norm: NormArg,
    /// `.json` for the summary, CSV matrix otherwise.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PdlagArgs {
    /// Tick CSV; both panels are binned from it.
    #[arg(long = "in", conflicts_with_all = ["p", "d"])]
    pub input: Option<PathBuf>,
    /// Quote panel file.
    #[arg(long, requires = "d")]
    pub p: Option<PathBuf>,
    /// Trade panel file.
    #[arg(long, requires = "p")]
    pub d: Option<PathBuf>,
    #[arg(long)]
    pub sort: bool,
    #[arg(long, value_delimiter = ',')]
    pub pairs: Option<Vec<String>>,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, default_value_t = 1, env = "FXSCALE_DT")]
    pub dt: u32,
    #[arg(long, default_value_t = -30, allow_negative_numbers = true)]
    pub tau_min: isize,
    #[arg(long, default_value_t = 30, allow_negative_numbers = true)]
    pub tau_max: isize,
    #[arg(long, value_enum, default_value = "lag0")]
    pub norm: NormArg,
    /// `.json` for the full profile, `tau,global_avg` CSV otherwise.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub ticks: TickInput,
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, value_enum, default_value = "quote")]
    pub kind: KindArg,
    /// Bin widths in minutes.
    #[arg(long, value_delimiter = ',', default_value = "1,5,15,60,240,1500")]
    pub dt: Vec<u32>,
    #[arg(long, default_value_t = 0.0, env = "FXSCALE_MIN_MEAN")]
    pub min_mean: f64,
    /// `.json` for the full curve, `dt,alpha,global_corr,normr` CSV
    /// otherwise.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct RollingArgs {
    #[command(flatten)]
    pub ticks: TickInput,
    #[arg(long, default_value_t = 1, env = "FXSCALE_DT")]
    pub dt: u32,
    #[command(flatten)]
    pub boot: BootstrapArgs,
    /// Week start, e.g. `sun`, `sun@22:00`.
    #[arg(long, default_value = "sun@00:00", env = "FXSCALE_ANCHOR")]
    pub anchor: String,
    /// Weeks in the centred window of the scaling-break rule.
    #[arg(long, default_value_t = 9)]
    pub break_window: usize,
    /// MADs above the window median that flag a scaling break.
    #[arg(long, default_value_t = 2.0)]
    pub break_k: f64,
    /// Report: `.csv` for the flat table, JSON lines otherwise.
    #[arg(long)]
    pub out: PathBuf,
    /// Additionally write the flat CSV table here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RegressArgs {
    /// Rolling report, JSON lines or flat CSV.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Regression JSON with one entry per series.
    #[arg(long)]
    pub out: PathBuf,
}

// ---------------------------------------------------------------------------
// Run plumbing

#[derive(Debug, Serialize)]
struct InputDigest {
    path: PathBuf,
    sha256: String,
    bytes: u64,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a Command,
    threads: Option<usize>,
    inputs: &'a [InputDigest],
    outputs: Vec<&'a Path>,
    warnings: &'a [String],
    wall_time_s: f64,
}

/// Inputs read and outputs staged by one run.
struct Run {
    inputs: Vec<InputDigest>,
    outputs: Vec<(PathBuf, Vec<u8>)>,
    warnings: Vec<String>,
    quiet: bool,
}

impl Run {
    fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).map_err(|e| io_context(e, path))?;
        self.inputs.push(InputDigest {
            path: path.to_path_buf(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            bytes: bytes.len() as u64,
        });
        Ok(bytes)
    }

    fn read_text(&mut self, path: &Path) -> Result<String> {
        String::from_utf8(self.read(path)?)
            .map_err(|e| Error::format("input file", format!("{}: {e}", path.display())))
    }

    fn write(&mut self, path: &Path, bytes: impl Into<Vec<u8>>) {
        self.outputs.push((path.to_path_buf(), bytes.into()));
    }

    fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        if !self.quiet {
            eprintln!("warning: {msg}");
        }
        self.warnings.push(msg);
    }

    fn commit(&self, cli: &Cli, started: Instant, primary: &Path) -> Result<()> {
        for (path, bytes) in &self.outputs {
            write_atomic(path, bytes)?;
        }
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &cli.command,
            threads: cli.threads,
            inputs: &self.inputs,
            outputs: self.outputs.iter().map(|(p, _)| p.as_path()).collect(),
            warnings: &self.warnings,
            wall_time_s: started.elapsed().as_secs_f64(),
        };
        let mut text = serde_json::to_vec_pretty(&manifest)?;
        text.push(b'\n');
        write_atomic(&manifest_path(primary), &text)
    }
}

fn io_context(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn manifest_path(out: &Path) -> PathBuf {
    with_suffix(out, ".manifest.json")
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    with_suffix(csv, ".json")
}

/// Writes `bytes` to a temporary sibling of `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("output path {} has no file name", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes).map_err(|e| io_context(e, &tmp))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_context(e, path)
    })
}

fn has_ext(path: &Path, exts: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

fn to_json(value: &impl Serialize) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn parse_pairs(list: &Option<Vec<String>>) -> Result<Option<BTreeSet<Pair>>> {
    list.as_ref()
        .map(|l| l.iter().map(|s| s.trim().parse()).collect())
        .transpose()
}

fn day_floor(t: Timestamp) -> Timestamp {
    t.duration_trunc(Duration::days(1)).expect("timestamps are in range")
}

/// Reads a tick file, applies the pair filter, and widens the span to the
/// whole UTC days the events touch.
fn load_ticks(run: &mut Run, path: &Path, sort: bool, pairs: &Option<Vec<String>>) -> Result<TickStream> {
    let text = run.read_text(path)?;
    let policy = if sort { OrderPolicy::SortLenient } else { OrderPolicy::Strict };
    let mut stream = parse_tick_str(&text, policy)?;
    if !stream.rejects().is_empty() {
        let first = &stream.rejects()[0];
        run.warn(format!(
            "{}: {} malformed lines skipped (first: line {}: {})",
            path.display(),
            stream.rejects().len(),
            first.line_number,
            first.reason
        ));
    }
    if let Some(include) = parse_pairs(pairs)? {
        stream = filter_pairs(&stream, &include)?;
    }
    let span = stream.span();
    let start = day_floor(span.start);
    let mut end = day_floor(span.end);
    if end < span.end {
        end += Duration::days(1);
    }
    stream.with_span(TimeSpan::new(start, end)?)
}

fn lcm(a: i64, b: i64) -> i64 {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    a / gcd(a, b) * b
}

/// Explicit `--start/--end`, or the longest run of whole `unit`-minute
/// blocks from the start of the stream's span.
fn resolve_window(stream: &TickStream, w: &WindowArgs, unit_minutes: i64) -> Result<TimeSpan> {
    let span = stream.span();
    let start = match &w.start {
        Some(s) => parse_ts(s)?,
        None => span.start,
    };
    let end = match &w.end {
        Some(e) => parse_ts(e)?,
        None => {
            let avail = (span.end - start).num_minutes();
            let blocks = avail / unit_minutes;
            if blocks < 1 {
                return Err(Error::Geometry(format!(
                    "data span {span} is shorter than {unit_minutes} minutes"
                )));
            }
            start + Duration::minutes(blocks * unit_minutes)
        }
    };
    TimeSpan::new(start, end)
}

fn stream_pairs(stream: &TickStream) -> Vec<Pair> {
    stream.pair_universe().iter().copied().collect()
}

fn read_panel(run: &mut Run, path: &Path) -> Result<ActivityPanel> {
    if has_ext(path, &["fxp", "fxp1"]) {
        let bytes = run.read(path)?;
        return read_panel_binary(&bytes[..]);
    }
    let csv = run.read(path)?;
    let side = sidecar_path(path);
    let meta = if side.exists() {
        let bytes = run.read(&side)?;
        serde_json::from_slice::<PanelMeta>(&bytes)?
    } else {
        let q = csv
            .split(|&b| b == b'\n')
            .next()
            .map_or(0, |h| h.iter().filter(|&&b| b == b',').count());
        let t0 = default_start();
        let meta = PanelMeta {
            kind: EventKind::Quote,
            dt_minutes: 1,
            t0: format_ts(&t0),
            t1: format_ts(&(t0 + Duration::minutes(q as i64))),
        };
        run.warn(format!(
            "no sidecar {}; assuming quotes, 1-minute bins from {}",
            side.display(),
            meta.t0
        ));
        meta
    };
    read_panel_csv(&csv[..], &meta)
}

fn stage_panel(run: &mut Run, panel: &ActivityPanel, out: &Path) -> Result<()> {
    if has_ext(out, &["fxp", "fxp1"]) {
        let mut bytes = Vec::new();
        write_panel_binary(panel, &mut bytes)?;
        run.write(out, bytes);
    } else {
        let (mut csv, mut side) = (Vec::new(), Vec::new());
        write_panel_csv(panel, &mut csv, &mut side)?;
        run.write(out, csv);
        run.write(&sidecar_path(out), side);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Subcommands

/// Generator spec file: [`GenSpec`] plus optional placement.
#[derive(Debug, Deserialize)]
struct SynthFile {
    #[serde(flatten)]
    spec: GenSpec,
    start: Option<String>,
    dt_minutes: Option<u32>,
}

fn cmd_synth(run: &mut Run, a: &SynthArgs) -> Result<()> {
    let file: SynthFile = serde_json::from_slice(&run.read(&a.spec)?)?;
    file.spec.validate()?;
    let start = match &file.start {
        Some(s) => parse_ts(s)?,
        None => default_start(),
    };
    let dt = file.dt_minutes.unwrap_or(1);
    let stream = gen_tick_stream(&file.spec, start, dt)?;
    if let Some(prefix) = &a.panels {
        let (p, d) = bin_both(&stream, dt, stream.span(), &file.spec.pairs)?;
        stage_panel(run, &p, &with_suffix(prefix, ".P.csv"))?;
        stage_panel(run, &d, &with_suffix(prefix, ".D.csv"))?;
    }
    let mut csv = Vec::with_capacity(stream.len() * 36);
    stream.write_csv(&mut csv)?;
    run.write(&a.out, csv);
    Ok(())
}

fn cmd_bin(run: &mut Run, a: &BinArgs) -> Result<()> {
    let stream = load_ticks(run, &a.ticks.input, a.ticks.sort, &a.ticks.pairs)?;
    let window = resolve_window(&stream, &a.window, i64::from(a.dt))?;
    let panel = bin_counts(&stream, a.kind.into(), a.dt, window, &stream_pairs(&stream))?;
    stage_panel(run, &panel, &a.out)
}

fn cmd_fit(run: &mut Run, a: &FitArgs) -> Result<()> {
    let panel = read_panel(run, &a.input)?;
    let fit = fit_scaling(&panel, a.boot.min_mean)?;
    let bootstrap = if a.no_bootstrap {
        None
    } else if a.boot.m > panel.n_bins() {
        run.warn(format!(
            "bootstrap skipped: m = {} exceeds Q = {}",
            a.boot.m,
            panel.n_bins()
        ));
        None
    } else {
        Some(bootstrap_scaling(
            &panel,
            a.boot.replicates,
            a.boot.m,
            a.boot.seed,
            a.boot.min_mean,
        )?)
    };
    let report = FitReport { fit, bootstrap };
    run.write(&a.out, to_json(&report)?);
    Ok(())
}

fn cmd_corr(run: &mut Run, a: &CorrArgs) -> Result<()> {
    let panel = read_panel(run, &a.input)?;
    let summary = corr_matrix(&panel, a.tau, a.norm.into())?;
    if summary.defined_fraction < 1.0 {
        run.warn(format!(
            "{:.1}% of off-diagonal entries are undefined",
            100.0 * (1.0 - summary.defined_fraction)
        ));
    }
    let bytes = if has_ext(&a.out, &["json"]) {
        to_json(&summary)?
    } else {
        summary.to_csv().into_bytes()
    };
    run.write(&a.out, bytes);
    Ok(())
}

fn cmd_pdlag(run: &mut Run, a: &PdlagArgs) -> Result<()> {
    let (p, d) = match (&a.input, &a.p, &a.d) {
        (Some(input), _, _) => {
            let stream = load_ticks(run, input, a.sort, &a.pairs)?;
            let window = resolve_window(&stream, &a.window, i64::from(a.dt))?;
            bin_both(&stream, a.dt, window, &stream_pairs(&stream))?
        }
        (None, Some(p), Some(d)) => (read_panel(run, p)?, read_panel(run, d)?),
        _ => {
            return Err(Error::Config(
                "give either --in TICKS or both --p and --d panels".into(),
            ))
        }
    };
    let profile = pd_lag_profile(&p, &d, a.tau_min, a.tau_max, a.norm.into())?;
    for r in profile.rows.iter().filter(|r| r.flag.is_some()) {
        run.warn(format!("lag {}: {}", r.tau, r.flag.as_deref().unwrap_or_default()));
    }
    let bytes = if has_ext(&a.out, &["json"]) {
        to_json(&profile)?
    } else {
        profile.to_csv().into_bytes()
    };
    run.write(&a.out, bytes);
    Ok(())
}

fn cmd_sweep(run: &mut Run, a: &SweepArgs) -> Result<()> {
    let stream = load_ticks(run, &a.ticks.input, a.ticks.sort, &a.ticks.pairs)?;
    if a.dt.contains(&0) {
        return Err(Error::Config("bin widths must be at least 1 minute".into()));
    }
    let unit = a.dt.iter().fold(1i64, |l, &d| lcm(l, i64::from(d)));
    let window = resolve_window(&stream, &a.window, unit)?;
    let base = bin_counts(&stream, a.kind.into(), 1, window, &stream_pairs(&stream))?;
    let curve = dt_sweep(&base, &a.dt, a.min_mean)?;
    for r in &curve.rows {
        for f in &r.flags {
            run.warn(format!("dt {}: {f}", r.dt));
        }
    }
    let bytes = if has_ext(&a.out, &["json"]) {
        to_json(&curve)?
    } else {
        curve.to_csv().into_bytes()
    };
    run.write(&a.out, bytes);
    Ok(())
}

fn cmd_rolling(run: &mut Run, a: &RollingArgs) -> Result<()> {
    let stream = load_ticks(run, &a.ticks.input, a.ticks.sort, &a.ticks.pairs)?;
    let anchor: WeekAnchor = a.anchor.parse()?;
    let plan = plan_weeks(stream.span(), anchor)?;
    let first = plan.windows[0].window.start;
    let last = plan.windows[plan.len() - 1].window.end;
    let events = stream.events();
    let before = events.partition_point(|e| e.timestamp < first);
    let after = events.len() - events.partition_point(|e| e.timestamp < last);
    if before + after > 0 {
        run.warn(format!(
            "{} events fall in partial weeks outside {}..{} and are not analysed",
            before + after,
            format_ts(&first),
            format_ts(&last)
        ));
    }
    let cfg = RollingConfig {
        dt_minutes: a.dt,
        replicates: a.boot.replicates,
        m: a.boot.m,
        min_mean: a.boot.min_mean,
        seed: a.boot.seed,
        pairs: None,
        break_window: a.break_window,
        break_k: a.break_k,
    };
    let report = rolling_weekly(&stream, &plan, &cfg)?;
    for w in &report.weeks {
        for f in w.flags.iter().filter(|f| !f.starts_with("scaling_break")) {
            run.warn(format!("week {}: {f}", w.label));
        }
    }
    let main = if has_ext(&a.out, &["csv"]) {
        report.to_csv().into_bytes()
    } else {
        report.to_jsonl()?.into_bytes()
    };
    run.write(&a.out, main);
    if let Some(csv) = &a.csv {
        run.write(csv, report.to_csv());
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RegressionOutput {
    #[serde(rename = "P")]
    p: Option<RegressionResult>,
    #[serde(rename = "D")]
    d: Option<RegressionResult>,
}

/// `(α, ⟨C⟩)` points per series from a rolling report file.
fn report_points(text: &str, csv: bool) -> Result<[Vec<(f64, f64)>; 2]> {
    let mut pts = [Vec::new(), Vec::new()];
    if csv {
        let mut lines = text.lines();
        let header: Vec<&str> = lines
            .next()
            .ok_or_else(|| Error::format("rolling CSV", "missing header"))?
            .split(',')
            .collect();
        let col = |name: &str| {
            header
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::format("rolling CSV", format!("no column {name}")))
        };
        let cols = [
            (col("alpha_P")?, col("avgcorr_P")?),
            (col("alpha_D")?, col("avgcorr_D")?),
        ];
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let fields: Vec<&str> = line.split(',').collect();
            let num = |i: usize| -> Result<Option<f64>> {
                match fields.get(i).map(|f| f.trim()) {
                    None | Some("") => Ok(None),
                    Some(f) => f.parse().map(Some).map_err(|_| {
                        Error::format("rolling CSV", format!("line {}: bad number {f:?}", n + 2))
                    }),
                }
            };
            for (k, &(ia, ic)) in cols.iter().enumerate() {
                if let (Some(a), Some(c)) = (num(ia)?, num(ic)?) {
                    pts[k].push((a, c));
                }
            }
        }
    } else {
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let v: serde_json::Value = serde_json::from_str(line)?;
            for (k, tag) in ["P", "D"].iter().enumerate() {
                let a = v[format!("fit_{tag}")]["alpha"].as_f64();
                let c = v[format!("corr_{tag}")]["global_avg"].as_f64();
                if let (Some(a), Some(c)) = (a, c) {
                    pts[k].push((a, c));
                }
            }
        }
    }
    Ok(pts)
}

fn cmd_regress(run: &mut Run, a: &RegressArgs) -> Result<()> {
    let text = run.read_text(&a.input)?;
    let [p_pts, d_pts] = report_points(&text, has_ext(&a.input, &["csv"]))?;
    let mut fit = |tag: &str, pts: &[(f64, f64)]| match alpha_corr_regression(pts) {
        Ok(r) => Ok(r),
        Err(e) => {
            run.warn(format!("series {tag}: {e}"));
            Err(e)
        }
    };
    let p = fit("P", &p_pts);
    let d = fit("D", &d_pts);
    let out = match (p, d) {
        (Err(e), Err(_)) => return Err(e),
        (p, d) => RegressionOutput { p: p.ok(), d: d.ok() },
    };
    run.write(&a.out, to_json(&out)?);
    Ok(())
}

fn primary_output(cmd: &Command) -> &Path {
    match cmd {
        Command::Synth(a) => &a.out,
        Command::Bin(a) => &a.out,
        Command::Fit(a) => &a.out,
        Command::Corr(a) => &a.out,
        Command::Pdlag(a) => &a.out,
        Command::Sweep(a) => &a.out,
        Command::Rolling(a) => &a.out,
        Command::Regress(a) => &a.out,
    }
}

fn dispatch(run: &mut Run, cmd: &Command) -> Result<()> {
    match cmd {
        Command::Synth(a) => cmd_synth(run, a),
        Command::Bin(a) => cmd_bin(run, a),
        Command::Fit(a) => cmd_fit(run, a),
        Command::Corr(a) => cmd_corr(run, a),
        Command::Pdlag(a) => cmd_pdlag(run, a),
        Command::Sweep(a) => cmd_sweep(run, a),
        Command::Rolling(a) => cmd_rolling(run, a),
        Command::Regress(a) => cmd_regress(run, a),
    }
}

/// Executes a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let started = Instant::now();
    let mut run = Run {
        inputs: Vec::new(),
        outputs: Vec::new(),
        warnings: Vec::new(),
        quiet: cli.quiet,
    };
    match cli.threads {
        Some(0) => return Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| dispatch(&mut run, &cli.command))?,
        None => dispatch(&mut run, &cli.command)?,
    }
    run.commit(cli, started, primary_output(&cli.command))
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code. Errors are reported on stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.class())
        }
    }
}
