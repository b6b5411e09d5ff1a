use alloc::string::String;

use thiserror::Error;

use crate::graph::NodeId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Coarse classification used by front-ends to map failures to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("artwork `{artwork}` has conflicting values for category {category}: `{first}` vs `{second}`")]
    ConflictingAssignment {
        artwork: String,
        category: String,
        first: String,
        second: String,
    },
    #[error("assignment references undeclared artwork `{0}`")]
    UnknownArtwork(String),
    #[error("artwork `{0}` has split {1} where {2} was expected")]
    WrongSplit(String, &'static str, &'static str),
    #[error("label link references unknown label `{category}:{value}`")]
    UnknownLabel { category: String, value: String },
    #[error("test artwork `{0}` collides with an artwork already in the graph")]
    DuplicateArtwork(String),
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("pseudo-labels missing for artwork `{artwork}` in category `{category}`")]
    MissingPseudoLabel { artwork: String, category: String },
    #[error("pseudo-labels for artwork `{artwork}` cover category `{category}` outside the strategy")]
    UnexpectedPseudoLabel { artwork: String, category: String },
    #[error("missing {what} for node {node}")]
    MissingRow { what: &'static str, node: NodeId },
    #[error("artwork `{0}` has no feature row")]
    MissingFeatures(String),
    #[error("no prediction for artwork `{artwork}` in category `{category}`")]
    MissingPrediction { artwork: String, category: String },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("target class {target} out of range for {classes} classes")]
    TargetOutOfRange { target: usize, classes: usize },
    #[error("non-finite {what} at iteration {iteration}")]
    NonFinite { what: &'static str, iteration: usize },
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter { .. } => ErrorKind::Config,
            Error::NonFinite { .. } => ErrorKind::Numeric,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn param(key: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
