//! Incremental learners, drift detectors, prequential evaluation and model
//! explanation.
//!
//! Learners share one contract, [`OnlineModel`]: predict first, then learn
//! (test-then-train). Drift detectors consume per-event correctness and
//! escalate stable → warning → drift; the [`ChangeLog`] records every
//! transition for later explanation export.

mod adwin;
mod anomaly;
mod ddm;
mod explain;
mod hoeffding;
mod kmeans;
mod prequential;
mod state;

pub use adwin::{eps_cut as adwin_eps_cut, Adwin};
pub use anomaly::AnomalyScorer;
pub use ddm::{Ddm, DriftLevel};
pub use explain::{explain_model, parse_rule_tree, RuleNode};
pub use hoeffding::{HoeffdingTree, HtParams};
pub use kmeans::KMeansState;
pub use prequential::{prequential_eval, Detector, EvalRow, EvalTrace, MajorityClass, OnlineModel};
pub use state::{ChangeEntry, ChangeLog, LearnerState, ModelState, MODEL_STATE_VERSION};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LearnError {
    #[error("label {0:?} is not a class of the schema")]
    UnknownClass(String),
    #[error("event lacks a label")]
    MissingLabel,
    #[error("expected {expected} numeric dimensions, got {got}")]
    DimensionalityMismatch { expected: usize, got: usize },
    #[error("detector input {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("model state: {0}")]
    State(String),
}
