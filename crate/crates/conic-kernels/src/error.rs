//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset construction, feature mapping, training and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("non-finite value at position {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("label error: {0}")]
    Label(String),

    #[error("class {label} has {count} samples, need at least {required}")]
    ClassTooSmall {
        label: i32,
        count: usize,
        required: usize,
    },

    #[error("dataset too large for a dense Gram matrix: {rows} rows (limit {limit})")]
    GramTooLarge { rows: usize, limit: usize },

    #[error("kernel {0} has no finite explicit feature map")]
    NoExplicitMap(String),

    #[error("kernel/map mismatch: {0}")]
    KernelMapMismatch(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
