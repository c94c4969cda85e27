//! Domain data model shared by all modules: events, schemas, pipelines,
//! clusters, placements and their validation.
//!
//! Everything here is an immutable value after construction and safe to
//! share across threads. Validation never panics and never throws: the
//! `validate_*` functions return a list of [`Violation`]s, empty when the
//! input satisfies every invariant.

mod cluster;
mod event;
mod pipeline;

pub use cluster::{validate_cluster, ClusterSpec, LinkSpec, NodeSpec, Placement, Tier};
pub use event::{Event, FieldKind, FieldSpec, Schema, Value};
pub use pipeline::{
    topological_order, validate_pipeline, EdgeSpec, OpKind, OperatorSpec, PipelineSpec, SlaSpec,
};

use serde::{Deserialize, Serialize};
use std::fmt;

/// A named invariant breach. Validation collects these instead of failing
/// fast so a config file can be fixed in one pass.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// The offending element (operator id, node id, edge, ...).
    pub element: String,
    /// Short machine-readable rule name, e.g. `"cycle"` or `"duplicate-id"`.
    pub rule: String,
    /// Human-readable detail.
    pub detail: String,
}

impl Violation {
    pub fn new(element: impl Into<String>, rule: &str, detail: impl Into<String>) -> Self {
        Violation {
            element: element.into(),
            rule: rule.to_string(),
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}): {}", self.rule, self.element, self.detail)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("pipeline is not a DAG: cycle through {0}")]
    Cyclic(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}
