//! Preprocessing and fusion operators that run on cloud or edge: imputation,
//! normalization, time-windowed and delayed-label joins, reservoir sampling,
//! feature hashing, and per-key window summarization for edge pre-aggregation.
//!
//! Time-based eviction is driven exclusively by watermarks: a watermark `w`
//! asserts no event with `ts < w` will arrive. Every operator here is
//! deterministic given its input order and seed.

mod delayed;
mod hashing;
mod impute;
mod join;
mod reservoir;
mod stats;
mod summarize;

pub use delayed::{DelayedLabelJoin, DelayedOutput};
pub use hashing::hash_project;
pub use impute::{ImputePolicy, Imputer, Normalizer};
pub use join::WindowJoin;
pub use reservoir::Reservoir;
pub use stats::{CategoricalStats, FieldStats, NumericStats, RunningStats};
pub use summarize::{FieldSummary, Summarizer, WindowSummary};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TransformError {
    #[error("field collision after join prefixing: {0}")]
    FieldCollision(String),
    #[error("duplicate instance_id among pending instances: {0}")]
    DuplicateInstance(String),
    #[error("event lacks the instance_id required for delayed-label joining")]
    MissingInstanceId,
    #[error("labels stream event lacks a label")]
    MissingLabel,
}
