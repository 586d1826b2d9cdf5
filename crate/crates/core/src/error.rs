use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad category of a failure, used for CLI exit codes and FFI status mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad configuration or invalid arguments.
    Usage,
    /// Bad or inconsistent input data, or I/O failure.
    Data,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: cannot decode image: {message}", path.display())]
    Decode { path: PathBuf, message: String },

    #[error("input directory {} does not exist", .0.display())]
    MissingDirectory(PathBuf),

    #[error("no files matching `{pattern}` in {}", dir.display())]
    NoFrames { dir: PathBuf, pattern: String },

    #[error("invalid filename pattern `{pattern}`: {message}")]
    BadPattern { pattern: String, message: String },

    #[error("{}: expected {expected_width}x{expected_height}, found {width}x{height}", path.display())]
    FrameDimensions {
        path: PathBuf,
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },

    #[error("dimension mismatch: expected {expected_width}x{expected_height}, found {width}x{height}")]
    DimensionMismatch {
        expected_width: usize,
        expected_height: usize,
        width: usize,
        height: usize,
    },

    #[error("buffer of length {len} does not match {width}x{height}")]
    BufferLength { width: usize, height: usize, len: usize },

    #[error("frame dimensions must be positive, got {width}x{height}")]
    EmptyFrame { width: usize, height: usize },

    #[error("{}: illegal ground-truth label {value} at pixel index {index}", path.display())]
    IllegalLabel {
        path: PathBuf,
        value: u8,
        index: usize,
    },

    #[error("mask value {value} at pixel index {index} is not a binary label")]
    IllegalMaskValue { value: u8, index: usize },

    #[error("config line {line}: {message}")]
    ConfigSyntax { line: usize, message: String },

    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("invalid parameter `{name}`: {message}")]
    InvalidParam { name: &'static str, message: String },

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("sequence has {found} frames; at least {required} are required (f_n + n + 1)")]
    TooFewFrames { required: usize, found: usize },

    #[error("initialization needs {required} frames, got {found}")]
    InsufficientInitFrames { required: usize, found: usize },

    #[error("frame count mismatch: {masks} masks vs {ground_truth} ground-truth frames")]
    FrameCountMismatch { masks: usize, ground_truth: usize },

    #[error("no scored pixels; all ground truth was excluded or absent")]
    NothingScored,
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::ConfigSyntax { .. }
            | Error::UnknownKey { .. }
            | Error::InvalidParam { .. }
            | Error::InvalidScene(_)
            | Error::BadPattern { .. } => ErrorClass::Usage,
            _ => ErrorClass::Data,
        }
    }
}
