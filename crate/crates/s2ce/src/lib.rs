//! S2CE: a desk-scale hybrid cloud/edge orchestrator for mining data streams.
//!
//! The crate is organized around the life of a streaming pipeline:
//!
//! * [`model`] — events, schemas, pipeline DAGs, clusters, placements, SLAs.
//! * [`connectors`] — wire formats (JSON lines + length-prefixed frames),
//!   file/socket sources and sinks, rate-controlled replay, output splitting.
//! * [`transforms`] — imputation, normalization, windowed and delayed-label
//!   joins, reservoir sampling, feature hashing, per-key window summaries.
//! * [`learn`] — Hoeffding tree, online k-means, z-score anomaly scoring,
//!   DDM/ADWIN drift detectors, prequential evaluation, model explanation.
//! * [`generate`] — synthetic drift-stream generators (hyperplane, Gaussian
//!   mixture) and a histogram generator fitted from real samples.
//! * [`orchestrate`] — cost model, placement search (greedy, local search,
//!   exhaustive oracle), the offloading controller, and knob tuning.
//! * [`runtime`] — deterministic, concurrent and simulated execution of a
//!   placed pipeline, with migration and an ordered control plane.
//!
//! The `book/` directory in the repository walks through the same modules
//! chapter by chapter; its code samples are compiled as doc-tests (see the
//! hidden `guide` module).

pub mod config;
pub mod connectors;
pub mod generate;
pub mod learn;
pub mod model;
pub mod orchestrate;
pub mod runtime;
pub mod transforms;

mod guide;

#[doc(hidden)]
pub mod testkit;

#[cfg(test)]
pub(crate) mod testutil;

pub use model::{ClusterSpec, Event, Placement, PipelineSpec, Schema, Value};
