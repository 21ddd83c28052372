use std::io;

use thiserror::Error;

/// Errors raised anywhere in the analysis pipeline.
///
/// Every variant carries enough context (line, position, state name) to
/// locate the offending input.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown POS tag `{tag}`")]
    UnknownTag { line: usize, tag: String },

    #[error("unknown {kind} `{value}`")]
    UnknownLabel { kind: &'static str, value: String },

    #[error("unknown symbol `{symbol}` at position {position}")]
    UnknownSymbol { symbol: String, position: usize },

    #[error("decode failure at position {position}: {reason}")]
    Decode { position: usize, reason: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("model format `{found}` version {version} is not supported (expected `{expected}` version {supported})")]
    Version {
        expected: &'static str,
        found: String,
        version: u32,
        supported: u32,
    },

    #[error("row `{row}` of {matrix} sums to {sum}, expected 1")]
    NotStochastic {
        matrix: &'static str,
        row: String,
        sum: f64,
    },

    #[error("baum-welch iteration {iteration}: {reason}")]
    Degenerate { iteration: usize, reason: String },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }

    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by a trained model rather than by input data.
    pub fn is_model_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidModel(_)
                | Error::Version { .. }
                | Error::NotStochastic { .. }
                | Error::Degenerate { .. }
                | Error::Decode { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
