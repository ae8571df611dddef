//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sideband frequency must be non-negative, got {0} Hz")]
    NegativeFrequency(f64),

    #[error("power transmission must lie in [0, 1], got {0}")]
    TransmissionOutOfRange(f64),

    #[error("normalized pump amplitude must satisfy 0 <= x < 1, got {0}")]
    AboveThreshold(f64),

    #[error("parametric gain must be >= 1, got {0}")]
    GainBelowUnity(f64),

    #[error("sample rate {sample_rate} Hz undersamples demodulation at {freq} Hz")]
    Undersampled { sample_rate: f64, freq: f64 },

    #[error("non-physical dark-noise subtraction: measured {measured} <= dark {dark}")]
    DarkSubtraction { measured: f64, dark: f64 },

    #[error("invalid spectrum window: {0}")]
    InvalidWindow(String),

    #[error("series too short: need {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("unattainable calibration target: {0}")]
    Calibration(String),

    #[error("mismatched spectra: {0}")]
    SpectrumMismatch(String),

    #[error("non-positive reference bin at index {index}")]
    NonPositiveReference { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("config schema error:\n{}", problems.join("\n"))]
    ConfigSchema { problems: Vec<String> },

    #[error("malformed {kind} file: {detail}")]
    Parse { kind: &'static str, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn schema(problems: Vec<String>) -> Self {
        Error::ConfigSchema { problems }
    }

    pub(crate) fn parse(kind: &'static str, detail: impl Into<String>) -> Self {
        Error::Parse {
            kind,
            detail: detail.into(),
        }
    }
}
