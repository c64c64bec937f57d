use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot normalize zero vector")]
    ZeroVector,
    #[error("vector must have at least one dimension")]
    EmptyVector,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("term weights must be finite and nonnegative: {term:?} has weight {weight}")]
    InvalidWeight { term: String, weight: f64 },
    #[error("empty term in sparse vector")]
    EmptyTerm,
    #[error("duplicate term in sparse vector: {0:?}")]
    DuplicateTerm(String),
    #[error("impact overflow for term {term:?}: {impact} does not fit in 16 bits")]
    ImpactOverflow { term: String, impact: f64 },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("duplicate doc_id: {0:?}")]
    DuplicateDocId(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncated index")]
    Truncated,
    #[error("not a sparse index")]
    NotSparseIndex,
    #[error("not a dense index")]
    NotDenseIndex,
    #[error("unsupported index version {found} (expected {expected})")]
    UnsupportedVersion { found: u32, expected: u32 },
    #[error("index checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ChecksumMismatch { stored: u32, computed: u32 },
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("unknown index kind (file magic {0:02x?})")]
    UnknownIndexKind(Vec<u8>),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("query not pre-encoded: {0}")]
    QueryNotEncoded(String),
    #[error("duplicate query {query:?} on lines {first_line} and {second_line}")]
    DuplicateQuery {
        query: String,
        first_line: usize,
        second_line: usize,
    },
    #[error("inference failed for model {}: {message}", path.display())]
    Inference { path: PathBuf, message: String },
    #[error("query kind does not match index kind: {0}")]
    KindMismatch(String),

    #[error("no overlapping queries between run and qrels")]
    NoOverlappingQueries,
    #[error("query {query} failed: {message}")]
    QueryFailed { query: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
