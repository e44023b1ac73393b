//! Crate-wide error type.

use std::io;

use thiserror::Error;

use crate::tickdata::Reject;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong between raw ticks and a finished report.
///
/// Variants are grouped by the failure class the CLI reports through its
/// exit code (see [`Error::class`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("input contains no tick events")]
    EmptyStream,

    #[error("line {line}: timestamp {found} precedes previous event at {previous}")]
    Ordering {
        line: usize,
        previous: String,
        found: String,
    },

    #[error("{rejected} of {total} data lines rejected (budget is 1%); first: {}", .rejects.first().map(|r| format!("line {}: {}", r.line_number, r.reason)).unwrap_or_default())]
    TooManyRejects {
        rejected: usize,
        total: usize,
        rejects: Vec<Reject>,
    },

    #[error("invalid pair code {0:?}: expected AAA/BBB with uppercase alphanumerics")]
    InvalidPair(String),

    #[error("pair selection matches no pair in the stream")]
    EmptySelection,

    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("coverage: window {window} is not inside stream span {span}")]
    Coverage { window: String, span: String },

    #[error("no full week between {start} and {end} for the given anchor")]
    EmptyPlan { start: String, end: String },

    #[error("empty series")]
    EmptySeries,

    #[error("lag {tau} out of range for series of length {len}")]
    LagDomain { tau: isize, len: usize },

    #[error("degenerate: {0}")]
    Degenerate(String),

    #[error("insufficient data: {usable} usable points, need at least 2")]
    InsufficientData { usable: usize },

    #[error("bootstrap degenerate: {failed} of {total} replicates failed")]
    BootstrapDegenerate { failed: usize, total: usize },

    #[error("invalid generator spec: {0}")]
    Spec(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Failure classes, one per documented CLI exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Geometry,
    Degeneracy,
    Io,
    Config,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::EmptyStream
            | Error::Ordering { .. }
            | Error::TooManyRejects { .. }
            | Error::InvalidPair(_)
            | Error::Format { .. }
            | Error::Json(_) => ErrorClass::Parse,
            Error::Geometry(_)
            | Error::Coverage { .. }
            | Error::EmptyPlan { .. }
            | Error::LagDomain { .. } => ErrorClass::Geometry,
            Error::EmptySelection
            | Error::EmptySeries
            | Error::Degenerate(_)
            | Error::InsufficientData { .. }
            | Error::BootstrapDegenerate { .. } => ErrorClass::Degeneracy,
            Error::Io(_) => ErrorClass::Io,
            Error::Spec(_) | Error::Unsupported(_) | Error::Config(_) => ErrorClass::Config,
        }
    }

    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }
}
