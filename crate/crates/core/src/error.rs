//! Crate-wide error type.

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    // ingest
    #[error("not a Level-5 MAT-file (bad header magic)")]
    BadMagic,
    #[error("unsupported MAT element for variable `{name}`: {reason}")]
    UnsupportedElement { name: String, reason: String },
    #[error("MAT-file truncated: {0}")]
    TruncatedFile(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("file contains no samples")]
    EmptyFile,
    #[error("signal too short: need at least {needed} samples, have {actual}")]
    TooShort { needed: usize, actual: usize },
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("label {label} is not defined for scheme {scheme}")]
    UnknownLabel { label: usize, scheme: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("non-finite value: {0}")]
    NonFinite(String),

    // featurize
    #[error("degenerate signal (zero variance) in {source_ref}")]
    DegenerateSignal { source_ref: String },

    // tensors / models
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("dropout probability must lie in [0, 1), got {0}")]
    InvalidP(f64),
    #[error("label {label} out of range for {n_classes} classes")]
    BadLabel { label: usize, n_classes: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("feature matrix is empty")]
    EmptyMatrix,
    #[error("k = {k} exceeds the {n} training rows")]
    KTooLarge { k: usize, n: usize },
    #[error("unsupported checkpoint: {0}")]
    Checkpoint(String),

    // evaluate
    #[error("class {class} has {count} members, fewer than k = {k}")]
    ClassTooSmall { class: usize, count: usize, k: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("signal has zero power; SNR is undefined")]
    ZeroPowerSignal,
    #[error("fold plan does not match dataset: {0}")]
    FoldMismatch(String),

    // io
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("serialization: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short stable identifier used in machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::BadMagic => "BadMagic",
            Error::UnsupportedElement { .. } => "UnsupportedElement",
            Error::TruncatedFile(_) => "TruncatedFile",
            Error::Parse { .. } => "ParseError",
            Error::EmptyFile => "EmptyFile",
            Error::TooShort { .. } => "TooShort",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::UnknownLabel { .. } => "UnknownLabel",
            Error::EmptyDataset => "EmptyDataset",
            Error::NonFinite(_) => "NonFinite",
            Error::DegenerateSignal { .. } => "DegenerateSignal",
            Error::ShapeMismatch(_) => "ShapeMismatch",
            Error::InvalidP(_) => "InvalidP",
            Error::BadLabel { .. } => "BadLabel",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::SingleClass => "SingleClass",
            Error::EmptyMatrix => "EmptyMatrix",
            Error::KTooLarge { .. } => "KTooLarge",
            Error::Checkpoint(_) => "Checkpoint",
            Error::ClassTooSmall { .. } => "ClassTooSmall",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::ZeroPowerSignal => "ZeroPowerSignal",
            Error::FoldMismatch(_) => "FoldMismatch",
            Error::Io { .. } => "IoError",
            Error::Config { .. } => "ConfigError",
            Error::Serde(_) => "SerdeError",
        }
    }
}
