//! Top-k retrieval over learned dense and learned sparse representations.

pub mod bench;
mod codec;
pub mod corpus;
pub mod dense_index;
pub mod encoding;
pub mod engine;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod model;
pub mod run;
pub mod sparse_index;
mod topk;

pub use codec::write_atomic;
pub use error::{Error, Result};
pub use run::Run;
