//! Query encoders: turn a query string into a dense or sparse vector at search time.

mod lookup;
#[cfg(feature = "onnx")]
mod runtime;
mod wordpiece;

pub use lookup::LookupEncoder;
pub(crate) use lookup::vector_from_json;
#[cfg(feature = "onnx")]
pub use runtime::{OutputHead, Pooling, RuntimeEncoder};
pub use wordpiece::{Vocab, CLS, CONTINUATION_PREFIX, DEFAULT_MAX_TOKENS, SEP, UNK};

use crate::error::Result;
use crate::model::{DenseVector, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Dense,
    Sparse,
}

#[derive(Debug, Clone, PartialEq)]
pub enum QueryVector {
    Dense(DenseVector),
    Sparse(SparseVector),
}

impl QueryVector {
    pub fn kind(&self) -> EncoderKind {
        match self {
            QueryVector::Dense(_) => EncoderKind::Dense,
            QueryVector::Sparse(_) => EncoderKind::Sparse,
        }
    }
}

/// Converts a query string into a vector. An encoder always returns the same kind and
/// is deterministic for a given input.
pub trait QueryEncoder: Send + Sync {
    fn kind(&self) -> EncoderKind;
    fn encode(&self, query: &str) -> Result<QueryVector>;
}
