//! Data augmentation toolkit and evaluation harness for extractive QA.

pub mod bioasq;
pub mod bm25;
pub mod corpus;
pub mod dataset;
pub mod embeddings;
pub mod error;
pub mod gateway;
pub mod jsonl;
pub mod scalar;
pub mod sentence;
pub mod subst;
pub mod text;

pub use dataset::{AnswerSpan, Dataset, Method, Provenance, Triple};
pub use error::{Error, Result};
pub use scalar::Scalar;
pub use text::MatchMode;

/// Default-precision alias: BM25 parameters over f64.
pub type Bm25Params = bm25::Bm25Params<f64>;

/// Default-precision alias: embedding table stored as f32 (the word2vec
/// binary on-disk precision).
pub type EmbeddingTable = embeddings::EmbeddingTable<f32>;
