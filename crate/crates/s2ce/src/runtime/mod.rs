//! Execution engine and simulation harness.
//!
//! Three ways to run a placed pipeline:
//!
//! * [`run_deterministic`] — single thread, event-at-a-time scheduling by
//!   `(ts, source, sequence)`; byte-exact reproducible, and invariant under
//!   placement and migration schedule.
//! * [`run_concurrent`] — one worker per operator over bounded channels
//!   with blocking backpressure; output multisets equal the deterministic
//!   run.
//! * [`run_simulated`] — discrete-event simulation on a virtual clock,
//!   using the orchestration cost model's service times with exponential
//!   jitter; exercises the offloading controller without executing
//!   operator logic.
//!
//! The ordered control plane ([`ControlMessage`]) is shared by the live
//! modes and applied at event boundaries only.

mod control;
mod det;
mod inputs;
mod metrics;
mod ops;
mod sim;
mod worker;

pub use control::{ControlKind, ControlMessage};
pub use det::{run_deterministic, RunOutput};
pub use inputs::{materialize_inputs, InputsMap};
pub use metrics::{write_metrics_csv, MetricsFrame, OpMetrics};
pub use ops::{Item, OpRuntime};
pub use sim::{run_simulated, write_decisions_csv, DecisionRow, SimOutput, WorkloadSchedule};
pub use worker::run_concurrent;

use crate::model::Violation;

#[derive(Debug, thiserror::Error)]
pub enum RuntimeError {
    #[error("pipeline failed validation: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("operator {op}: {source}")]
    Operator {
        op: String,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("operator {op}: bad parameter {param}: {detail}")]
    BadParam {
        op: String,
        param: String,
        detail: String,
    },
    #[error("unknown operator {0}")]
    UnknownOperator(String),
    #[error("control message out of order: got seq {got}, expected {expected}")]
    OutOfOrderControl { got: u64, expected: u64 },
    #[error("migration target infeasible: {0}")]
    TargetInfeasible(String),
    #[error("no progress for {0:?}; aborting (likely deadlock)")]
    Deadlock(std::time::Duration),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl RuntimeError {
    pub(crate) fn op(op: &str, err: impl std::error::Error + Send + Sync + 'static) -> Self {
        RuntimeError::Operator {
            op: op.to_string(),
            source: Box::new(err),
        }
    }
}
