use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the keysched library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("no PGM frames found in {0}")]
    EmptyDirectory(PathBuf),

    #[error("malformed PGM {path}: {reason}")]
    MalformedPgm { path: PathBuf, reason: String },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("unsupported WAV encoding: {0}")]
    UnsupportedEncoding(String),

    #[error("unsupported channel count {0}, expected mono")]
    UnsupportedChannels(u16),

    #[error("unsupported sample rate {0} Hz, expected 16000")]
    UnsupportedRate(u32),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("image of {height}x{width} is too small for the requested pyramid (coarsest level must be at least 8x8)")]
    TooSmall { height: usize, width: usize },

    #[error("input too short: {0}")]
    TooShort(String),

    #[error("invalid smoothing window {0}: must be odd and >= 1")]
    InvalidWindow(usize),

    #[error("curve must be min-max normalized before extrema detection")]
    NotNormalized,

    #[error("bad interval: {0} must be less than {1}")]
    BadInterval(usize, usize),

    #[error("invalid keyframe count {t_k} for {total} frames")]
    InvalidK { t_k: usize, total: usize },

    #[error("extrema inconsistent with curve: {0}")]
    InconsistentExtrema(String),

    #[error("wrong sample rate {0} Hz, mel extraction needs 16000")]
    WrongSampleRate(u32),

    #[error("kernel {kernel} larger than input length {len}")]
    KernelTooLarge { kernel: usize, len: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("count mismatch: {0}")]
    CountMismatch(String),

    #[error("bad window geometry: {0}")]
    BadGeometry(String),

    #[error("embedding dimension {0} must be even and >= 2")]
    OddDim(usize),

    #[error("no instance has ground-truth keypoints")]
    NoValidInstances,

    #[error("class count {0} is not divisible by three")]
    NotDivisibleByThree(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
