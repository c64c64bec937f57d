//! HNSW proximity graph over unit-normalized dense vectors, plus an exhaustive flat
//! index used as the exact reference.

mod audit;
mod flat;
mod format;
mod hnsw;

pub use audit::AuditReport;
pub use flat::FlatIndex;
pub use format::{DENSE_MAGIC, DENSE_VERSION};
pub use hnsw::{
    HnswGraph, HnswParams, DEFAULT_EF_CONSTRUCTION, DEFAULT_EF_SEARCH, DEFAULT_M, DEFAULT_SEED,
};
