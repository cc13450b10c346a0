use std::io;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate rays: {0}")]
    DegenerateRays(String),

    #[error("non-finite iterate encountered during optimization")]
    NonFinite,

    #[error("degenerate neighborhood: {0}")]
    DegenerateNeighborhood(String),

    #[error("degenerate direction: {0}")]
    DegenerateDirection(String),

    #[error("ambiguous orientation continuity: {0}")]
    AngleWrap(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    /// Short snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Validation(_) => "validation",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::DegenerateRays(_) => "degenerate_rays",
            Error::NonFinite => "non_finite",
            Error::DegenerateNeighborhood(_) => "degenerate_neighborhood",
            Error::DegenerateDirection(_) => "degenerate_direction",
            Error::AngleWrap(_) => "angle_wrap",
            Error::Io(_) => "io",
        }
    }

    /// True for errors caused by bad input rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse(_) | Error::Validation(_) | Error::DimensionMismatch { .. }
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
