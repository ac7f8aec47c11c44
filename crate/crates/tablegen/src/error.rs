//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown document id: {0}")]
    UnknownDocument(String),

    #[error("unknown entity representation `{0}` (expected all, description, or properties)")]
    UnknownRepresentation(String),

    #[error("empty input sequence: {0}")]
    EmptySequence(&'static str),

    #[error("empty feedback set: {0} is undefined without feedback from the other subtask")]
    EmptyFeedback(&'static str),

    #[error("no trained model for feature {feature}: expected `{model}`")]
    MissingModel {
        feature: &'static str,
        model: &'static str,
    },

    #[error("weight vector has {got} entries, expected {expected}")]
    WeightMismatch { expected: usize, got: usize },

    #[error("no usable training pairs: no query has both a positive and a negative example")]
    NoTrainingPairs,

    #[error("oracle run needs ground-truth entities or labels, got neither (or an empty list)")]
    MissingGroundTruth,

    #[error("round {round} failed: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("mismatched query sets: {0}")]
    QuerySetMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("corrupt artifact bundle: {0}")]
    CorruptBundle(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
