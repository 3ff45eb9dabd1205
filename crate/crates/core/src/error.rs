use std::fmt;

/// Errors raised by every part of the library.
///
/// Variant names are stable; [`Error::name`] returns them as strings so that
/// foreign callers can map failures without parsing messages.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(String),
    #[error("invalid count: {0}")]
    InvalidCount(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("degenerate feature: {0}")]
    DegenerateFeature(String),
    #[error("invalid cost matrix: {0}")]
    InvalidCost(String),
    #[error("parse error{}: {message}", location(*.line))]
    ParseError {
        line: Option<usize>,
        message: String,
    },
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid pose: {0}")]
    InvalidPose(String),
    #[error("empty view: no points survived the viewpoint filter")]
    EmptyView,
    #[error("schema error: {0}")]
    SchemaError(String),
    #[error("consistency error: {0}")]
    ConsistencyError(String),
    #[error("judge unavailable: {0}")]
    JudgeUnavailable(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn location(line: Option<usize>) -> String {
    match line {
        Some(l) => format!(" at line {l}"),
        None => String::new(),
    }
}

impl Error {
    pub fn name(&self) -> &'static str {
        match self {
            Error::EmptyInput(_) => "EmptyInput",
            Error::InvalidCount(_) => "InvalidCount",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::DegenerateFeature(_) => "DegenerateFeature",
            Error::InvalidCost(_) => "InvalidCost",
            Error::ParseError { .. } => "ParseError",
            Error::InvalidBox(_) => "InvalidBox",
            Error::InvalidPose(_) => "InvalidPose",
            Error::EmptyView => "EmptyView",
            Error::SchemaError(_) => "SchemaError",
            Error::ConsistencyError(_) => "ConsistencyError",
            Error::JudgeUnavailable(_) => "JudgeUnavailable",
            Error::NonFinite(_) => "NonFinite",
            Error::Io(_) => "Io",
        }
    }

    pub fn parse(message: impl fmt::Display) -> Self {
        Error::ParseError {
            line: None,
            message: message.to_string(),
        }
    }

    pub fn parse_at(line: usize, message: impl fmt::Display) -> Self {
        Error::ParseError {
            line: Some(line),
            message: message.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
