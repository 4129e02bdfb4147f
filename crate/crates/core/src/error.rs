use thiserror::Error;

use crate::domain::Word;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// A parameter is out of its documented range.
    Usage,
    /// Input data violates an invariant.
    Data,
    /// A numerical procedure could not produce a defined result.
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("image {id}: descriptor {row} has length {found}, expected {expected}")]
    DescriptorDim { id: String, row: usize, expected: usize, found: usize },

    #[error("image {id}: no descriptors")]
    EmptyImage { id: String },

    #[error("image {id}: label {label:?} is not a declared class")]
    UnknownLabel { id: String, label: String },

    #[error("{context}: non-finite value")]
    NonFinite { context: String },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: &'static str, expected: usize, found: usize },

    #[error("invalid codebook: {0}")]
    InvalidCodebook(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("word {0} is not active")]
    WordNotActive(Word),

    #[error("word {0} has no surviving neighbors")]
    NoSurvivingNeighbors(Word),

    #[error("invalid transition weights: {0}")]
    InvalidWeights(String),

    #[error("invalid prune set: {0}")]
    InvalidPruneSet(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("requested K = {k} but only {distinct} distinct descriptors are available")]
    TooFewDistinct { k: usize, distinct: usize },

    #[error("no Monte-Carlo sample fell in the cell of word {word} ({samples} drawn)")]
    NoKeptSamples { word: Word, samples: usize },

    #[error("image {image}, row {row}: surviving coefficients vanish, renormalization undefined")]
    RenormalizationUndefined { image: usize, row: usize },

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("neighbor lists exhausted while building a move")]
    NeighborsExhausted,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter(_) => ErrorKind::Usage,
            Error::NoKeptSamples { .. }
            | Error::RenormalizationUndefined { .. }
            | Error::Degenerate(_)
            | Error::NeighborsExhausted => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }
}
