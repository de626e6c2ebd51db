use std::path::PathBuf;

/// Errors returned by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A signal passed to the real Fourier transform was shorter than two samples.
    #[error("signal of length {0} is too short for a real Fourier transform (need >= 2)")]
    SignalTooShort(usize),
    /// A spectrum's bin count does not fit its original signal length.
    #[error("spectrum has {bins} bins, inconsistent with original length {length}")]
    MalformedSpectrum { bins: usize, length: usize },
    /// A low-pass request keeps zero bins or more bins than exist.
    #[error("cannot keep {keep} of {available} bins")]
    InvalidFilter { keep: usize, available: usize },
    /// Configuration values violate an invariant.
    #[error("{0}")]
    InvalidConfig(String),
    /// A vector or matrix had the wrong length.
    #[error("{what}: expected length {expected}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// The Woodbury inner system was too ill conditioned to solve.
    #[error("Woodbury inner matrix is ill conditioned (condition estimate {0:.3e})")]
    IllConditionedUpdate(f64),
    /// Exponential weights collapsed to zero.
    #[error("all exponential weights vanished")]
    DegenerateWeights,
    /// A loss fed to the weighter was NaN, infinite or negative.
    #[error("invalid loss value {0}")]
    InvalidLoss(f64),
    /// The seasonal period is not shorter than the context.
    #[error("seasonality {season} must be >= 1 and shorter than the context length {context}")]
    InvalidSeasonality { season: usize, context: usize },
    /// A block average was requested over zero windows.
    #[error("cannot average over an empty block")]
    EmptyBlock,
    /// The series is too short for the requested run.
    #[error("{0}")]
    InsufficientData(String),
    /// The input series carries a non-finite value.
    #[error("non-finite value at time {index} in channel {channel}")]
    CorruptSeries { channel: usize, index: usize },
    /// A precomputed forecast file has no row for the requested coordinates.
    #[error("no precomputed forecast for t={t}, channel={channel}")]
    MissingForecast { t: usize, channel: usize },
    /// A delimited text file could not be parsed.
    #[error("{}:{line}{}: {message}", path.display(), column.map(|c| format!(":{c}")).unwrap_or_default())]
    ParseError {
        path: PathBuf,
        line: usize,
        column: Option<usize>,
        message: String,
    },
    /// Reading or writing a file failed.
    #[error("{}: {source}", path.display())]
    IoError {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable variant name, printed by the command-line front end.
    pub fn name(&self) -> &'static str {
        match self {
            Error::SignalTooShort(_) => "SignalTooShort",
            Error::MalformedSpectrum { .. } => "MalformedSpectrum",
            Error::InvalidFilter { .. } => "InvalidFilter",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::IllConditionedUpdate(_) => "IllConditionedUpdate",
            Error::DegenerateWeights => "DegenerateWeights",
            Error::InvalidLoss(_) => "InvalidLoss",
            Error::InvalidSeasonality { .. } => "InvalidSeasonality",
            Error::EmptyBlock => "EmptyBlock",
            Error::InsufficientData(_) => "InsufficientData",
            Error::CorruptSeries { .. } => "CorruptSeries",
            Error::MissingForecast { .. } => "MissingForecast",
            Error::ParseError { .. } => "ParseError",
            Error::IoError { .. } => "IoError",
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::IoError {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
