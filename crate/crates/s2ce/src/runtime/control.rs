use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    /// Retarget a `sample` operator's pass rate or a `reservoir_sample`
    /// operator's capacity.
    SetSampleRate { rate: f64 },
    /// Move the operator to another node (pause-drain-transfer-resume).
    Migrate { to: String },
    /// Emit the operator's serialized model state.
    Snapshot,
    /// Drain and stop the pipeline.
    Shutdown,
}

/// Internal-API command. Messages are totally ordered per pipeline by
/// `seq` and applied at event boundaries: `at_event` is the index in the
/// merged source feed before which the message takes effect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlMessage {
    pub seq: u64,
    pub at_event: u64,
    /// Target operator id; empty for pipeline-wide kinds (`shutdown`).
    #[serde(default)]
    pub target: String,
    pub kind: ControlKind,
}

impl ControlMessage {
    pub fn new(seq: u64, at_event: u64, target: &str, kind: ControlKind) -> Self {
        ControlMessage {
            seq,
            at_event,
            target: target.to_string(),
            kind,
        }
    }
}
