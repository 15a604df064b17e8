use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse grouping used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Domain,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("missing role column \"{0}\"")]
    MissingRoleColumn(String),

    #[error("invalid column roles: {0}")]
    InvalidRoles(String),

    #[error("no usable rows after dropping {dropped} incomplete rows")]
    NoRows { dropped: usize },

    #[error("domain error at index {index}: {message}")]
    Domain { index: usize, message: String },

    #[error("degenerate target: {0}")]
    DegenerateTarget(String),

    #[error("too few samples for quantile map: need at least 10, got {0}")]
    TooFewSamples(usize),

    #[error("zero variance")]
    ZeroVariance,

    #[error("constant trial \"{0}\"")]
    ConstantTrial(String),

    #[error("unknown {role} key \"{key}\"")]
    UnknownKey { role: &'static str, key: String },

    #[error("collinear context")]
    CollinearContext,

    #[error("zero denominator: {0}")]
    ZeroDenominator(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("transform needs {0} information that was not supplied")]
    MissingSide(&'static str),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(index: usize, message: impl Into<String>) -> Self {
        Error::Domain {
            index,
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Config(_) | Error::InvalidRoles(_) | Error::MissingRoleColumn(_) => {
                ErrorClass::Config
            }
            Error::Domain { .. } => ErrorClass::Domain,
            _ => ErrorClass::Data,
        }
    }
}
