use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("zero-norm vector in set {set} cannot be normalized for cosine similarity")]
    ZeroVector { set: u64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("non-finite component in set {set}")]
    NonFinite { set: u64 },

    #[error("vector set {0} is empty")]
    EmptySet(u64),

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("corpus ids must be the dense range 0..N; position {position} holds id {id}")]
    NonDenseIds { position: usize, id: u64 },

    #[error("transport solver failed: {0}")]
    SolverFailure(String),

    #[error("code {code} out of range for a codebook of {k1} centroids")]
    CodeOutOfRange { code: u32, k1: usize },

    #[error("k-means needs at least {needed} points, got {available}")]
    TooFewPoints { needed: usize, available: usize },

    #[error("profile is empty")]
    EmptyProfile,

    #[error("decision tree needs at least {needed} samples, got {available}")]
    TooFewSamples { needed: usize, available: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("unknown document id {0}")]
    UnknownDocId(u64),

    #[error("document id {0} is already present")]
    DuplicateId(u64),

    #[error("query has no vectors")]
    EmptyQuery,

    #[error("graph has no live vertices")]
    EmptyGraph,

    #[error("ground-truth set is empty")]
    EmptyGroundTruth,

    #[error("qrels inconsistent with queries: {0}")]
    InconsistentQrels(String),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    BadVersion(u32),

    #[error("file truncated: {0}")]
    Truncated(String),

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    ChecksumMismatch { stored: u64, computed: u64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}
