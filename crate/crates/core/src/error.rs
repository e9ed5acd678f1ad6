use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid boundary partition: {0}")]
    InvalidPartition(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("size overflow: {0}")]
    Size(String),
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("enumeration cap exceeded: {what} needs {needed}, cap is {cap}")]
    EnumerationCap {
        what: &'static str,
        needed: usize,
        cap: usize,
    },
    #[error("measures are defined on different graphs")]
    GraphMismatch,
    #[error("invalid enhancement plan: {0}")]
    Plan(String),
    #[error("ordering Y <= X <= Z violated at step {step} on edge {edge}")]
    OrderingViolation { step: u64, edge: usize },
    #[error("duality is only implemented for an empty boundary")]
    UnsupportedBoundary,
    #[error("invalid nested boxes: {0}")]
    Nesting(String),
    #[error("invalid device candidate: {0}")]
    InvalidCandidate(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}
