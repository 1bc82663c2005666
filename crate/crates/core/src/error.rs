use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A value violates the invariant of the type it was meant to build.
    #[error("invalid {what}: {reason}")]
    InvalidParameter { what: &'static str, reason: String },

    #[error("samples_per_period = {0} is not a positive multiple of 4")]
    SamplesPerPeriodNotMultipleOf4(usize),

    #[error("trace length {len} is not a whole number of periods of {samples_per_period} samples")]
    NotWholePeriods {
        len: usize,
        samples_per_period: usize,
    },

    /// No frequency bin survived the denominator and magnitude thresholds.
    #[error("no frequency bin passed the inclusion thresholds")]
    AllBinsExcluded,

    #[error("observation point lies within {tolerance:e} m of the conductor")]
    OnWireSingularity { tolerance: f64 },

    #[error("center field magnitude {0:e} T is too small to define homogeneity")]
    ZeroCenterField(f64),

    #[error("field map has no node at the coil center")]
    NoCenterNode,

    #[error("half cycle has no positive maximum")]
    NoPeak,

    #[error("plot needs at least one series with two or more points")]
    EmptySeries,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("config validation error: {field}: {message}")]
    Validation { field: String, message: String },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the filesystem rather than by inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
