//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv parse error at line {line}: {msg}")]
    CsvParse { line: u64, msg: String },

    #[error("validation error{}: {msg}", fmt_line(*.line))]
    Validation { line: Option<u64>, msg: String },

    #[error("duplicate timestamp {timestamp} at line {line}")]
    DuplicateTimestamp { line: u64, timestamp: String },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("index {index} out of range for series of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("index {t} is inside the warm-up region (first defined index is {warm_up})")]
    WarmUp { t: usize, warm_up: usize },

    #[error("series too short: length {len}, need at least {required}")]
    SeriesTooShort { len: usize, required: usize },

    #[error("insufficient data: need {required} bars, have {available}")]
    InsufficientData { required: usize, available: usize },

    #[error("insufficient history: {msg}")]
    InsufficientHistory { msg: String },

    #[error(
        "no candidate produced a defined indicator value in window {window_index} \
         (train {train_start} .. {train_end})"
    )]
    NoDefinedIndicator {
        window_index: usize,
        train_start: String,
        train_end: String,
    },

    #[error("config error: {0}")]
    Config(String),
}

fn fmt_line(line: Option<u64>) -> String {
    match line {
        Some(l) => format!(" at line {l}"),
        None => String::new(),
    }
}
