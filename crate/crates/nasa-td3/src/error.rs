//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A tensor or batch had the wrong shape for the operation.
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: String,
        expected: String,
        got: String,
    },

    /// An argument was structurally valid but semantically unusable.
    #[error("invalid argument in {context}: {msg}")]
    InvalidArgument { context: String, msg: String },

    /// A config file or override could not be parsed.
    #[error("config error{}: {msg}", fmt_line(.line))]
    Config { line: Option<usize>, msg: String },

    /// A checkpoint file was malformed or truncated.
    #[error("checkpoint error at byte {offset}: {msg}")]
    Checkpoint { offset: u64, msg: String },

    /// A metrics CSV handed to the plotter could not be parsed.
    #[error("csv error in {file} line {line}: {msg}")]
    Csv {
        file: String,
        line: usize,
        msg: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(context: &str, expected: impl ToString, got: impl ToString) -> Self {
        Error::ShapeMismatch {
            context: context.to_string(),
            expected: expected.to_string(),
            got: got.to_string(),
        }
    }

    pub fn invalid(context: &str, msg: impl ToString) -> Self {
        Error::InvalidArgument {
            context: context.to_string(),
            msg: msg.to_string(),
        }
    }
}

fn fmt_line(line: &Option<usize>) -> String {
    match line {
        Some(n) => format!(" (line {n})"),
        None => String::new(),
    }
}
