//! Synthetic data stream generators with controllable drift, skew, volume
//! and velocity, plus a privacy-shielding generator fitted from real
//! samples.
//!
//! Every generator is an iterator that is byte-deterministic given its spec
//! and seed. Drift boundaries are known statically from the schedule and
//! exposed as a ground-truth side channel, so detector delay can be
//! measured exactly rather than estimated.

mod fitted;
mod spec;
mod streams;

pub use fitted::{fit_generator, FittedField, FittedModel};
pub use spec::{ConceptSpec, DriftKind, DriftPoint, GenKind, GeneratorSpec};
pub use streams::{build_generator, DriftBoundary, StreamGenerator};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GenerateError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("cannot fit a generator on an empty sample")]
    EmptySample,
}
