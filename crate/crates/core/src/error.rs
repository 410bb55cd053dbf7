use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("path does not exist: {0}")]
    MissingPath(PathBuf),

    #[error("sequence is empty")]
    EmptySequence,

    #[error("sequence needs at least {needed} frames, got {got}")]
    SequenceTooShort { needed: usize, got: usize },

    #[error("dimension mismatch: expected {expected:?}, got {got:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("unsupported bit depth {0} (only 8 and 16 are supported)")]
    UnsupportedDepth(u32),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("malformed image file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("frame {width}x{height} too small for {levels} wavelet levels")]
    FrameTooSmall {
        width: usize,
        height: usize,
        levels: u8,
    },

    #[error("compression rate infeasible: budget {budget} bytes, minimum achievable {minimum} bytes")]
    InfeasibleRate { budget: usize, minimum: usize },

    #[error("corrupt stream: {0}")]
    CorruptStream(String),

    #[error("truncated stream: expected {expected} bytes, found {found}")]
    TruncatedStream { expected: usize, found: usize },

    #[error("frame count mismatch: {masks} masks vs {truth} ground-truth frames")]
    FrameCountMismatch { masks: usize, truth: usize },

    #[error("empty region")]
    EmptyRegion,

    #[error("frame {index}: {source}")]
    AtFrame {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    pub fn at_frame(self, index: usize) -> Self {
        Error::AtFrame {
            index,
            source: Box::new(self),
        }
    }

    /// Data errors come from bad inputs; everything else is a usage or internal fault.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::InvalidParam { .. } => false,
            Error::AtFrame { source, .. } => source.is_data_error(),
            _ => true,
        }
    }
}
