use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("value index {value} out of range for attribute {attr} ({size} values) in sample {id}")]
    Range {
        id: u64,
        attr: usize,
        value: u32,
        size: usize,
    },
    #[error("duplicate sample id {0}")]
    DuplicateId(u64),
    #[error("unknown sample id {0}")]
    UnknownId(u64),
    #[error("invalid attribute axes ({0}, {1})")]
    Axis(usize, usize),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("insufficient data in cell ({label}, {nuisance}): need {need}, have {have}")]
    InsufficientData {
        label: u32,
        nuisance: u32,
        need: usize,
        have: usize,
    },
    #[error("insufficient data: {0}")]
    InsufficientPool(String),
    #[error("mapping error: {0}")]
    Mapping(String),
    #[error("constraint error: {0}")]
    Constraint(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("negative weight {weight} at index {index}")]
    NegativeWeight { index: usize, weight: f64 },
    #[error("augmentation source error: {0}")]
    AugSource(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("non-finite loss at step {0}")]
    NonFiniteLoss(usize),
    #[error("unknown transform {0:?}")]
    UnknownTransform(String),
    #[error("missing cell: {0}")]
    MissingCell(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("sweep cell {cell}: {source}")]
    InCell {
        cell: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable variant name, used in machine-readable error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "ParseError",
            Error::Schema(_) => "SchemaError",
            Error::Range { .. } => "RangeError",
            Error::DuplicateId(_) => "DuplicateIdError",
            Error::UnknownId(_) => "UnknownIdError",
            Error::Axis(..) => "AxisError",
            Error::Io { .. } => "IoError",
            Error::Format(_) => "FormatError",
            Error::InsufficientData { .. } | Error::InsufficientPool(_) => "InsufficientDataError",
            Error::Mapping(_) => "MappingError",
            Error::Constraint(_) => "ConstraintError",
            Error::Degenerate(_) => "DegenerateError",
            Error::NegativeWeight { .. } => "NegativeWeightError",
            Error::AugSource(_) => "AugSourceError",
            Error::Dimension { .. } => "DimensionError",
            Error::NonFiniteLoss(_) => "NonFiniteLossError",
            Error::UnknownTransform(_) => "UnknownTransformError",
            Error::MissingCell(_) => "MissingCellError",
            Error::Config(_) => "ConfigError",
            Error::InCell { source, .. } => source.kind(),
        }
    }

    /// Errors caused by the caller's inputs rather than by the run itself.
    pub fn is_precondition(&self) -> bool {
        match self {
            Error::InCell { source, .. } => source.is_precondition(),
            e => !matches!(e, Error::Io { .. } | Error::NonFiniteLoss(_)),
        }
    }
}

/// A configuration field that failed validation, located by JSON pointer.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{path}: {reason}")]
pub struct FieldError {
    pub path: String,
    pub reason: String,
}

impl FieldError {
    pub fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        FieldError {
            path: path.into(),
            reason: reason.into(),
        }
    }

    /// Prepends `prefix` (itself a JSON pointer) to the path.
    pub fn under(mut self, prefix: &str) -> Self {
        self.path = format!("{prefix}{}", self.path);
        self
    }
}
