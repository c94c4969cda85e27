use super::{AnomalyScorer, HoeffdingTree, KMeansState, LearnError};
use serde::{Deserialize, Serialize};

pub const MODEL_STATE_VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangeEntry {
    pub ts: i64,
    pub detector: String,
    pub transition: String,
    pub statistic: f64,
}

/// Append-only record of detector transitions, timestamps non-decreasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ChangeLog {
    pub entries: Vec<ChangeEntry>,
}

impl ChangeLog {
    pub fn push(&mut self, ts: i64, detector: &str, transition: &str, statistic: f64) {
        let ts = self.entries.last().map(|e| e.ts.max(ts)).unwrap_or(ts);
        self.entries.push(ChangeEntry {
            ts,
            detector: detector.to_string(),
            transition: transition.to_string(),
            statistic,
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LearnerState {
    Hoeffding(HoeffdingTree),
    KMeans(KMeansState),
    Anomaly(AnomalyScorer),
}

/// Serializable learner snapshot: the learner union, its change log, and
/// the fingerprint of the schema it was trained under.
///
/// Wire layout: one version byte, the 8-byte big-endian schema fingerprint,
/// then the canonical JSON of the remainder. Canonical because every map in
/// learner state is ordered, so equal states serialize to equal bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub schema_fingerprint: u64,
    pub learner: LearnerState,
    pub changelog: ChangeLog,
}

impl ModelState {
    pub fn new(schema_fingerprint: u64, learner: LearnerState, changelog: ChangeLog) -> Self {
        ModelState {
            schema_fingerprint,
            learner,
            changelog,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![MODEL_STATE_VERSION];
        out.extend_from_slice(&self.schema_fingerprint.to_be_bytes());
        out.extend_from_slice(&serde_json::to_vec(self).expect("model state serializes"));
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LearnError> {
        if bytes.len() < 9 {
            return Err(LearnError::State("truncated model state".into()));
        }
        if bytes[0] != MODEL_STATE_VERSION {
            return Err(LearnError::State(format!(
                "version {} unsupported (expected {MODEL_STATE_VERSION})",
                bytes[0]
            )));
        }
        let fp = u64::from_be_bytes(bytes[1..9].try_into().unwrap());
        let state: ModelState = serde_json::from_slice(&bytes[9..])
            .map_err(|e| LearnError::State(e.to_string()))?;
        if state.schema_fingerprint != fp {
            return Err(LearnError::State(
                "header fingerprint disagrees with body".into(),
            ));
        }
        Ok(state)
    }

    /// Loads and enforces that the model was trained under `expected`
    /// schema (skipped when `force`).
    pub fn load_checked(bytes: &[u8], expected: u64, force: bool) -> Result<Self, LearnError> {
        let state = Self::from_bytes(bytes)?;
        if !force && state.schema_fingerprint != expected {
            return Err(LearnError::State(format!(
                "schema fingerprint {:016x} does not match pipeline schema {:016x}",
                state.schema_fingerprint, expected
            )));
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::HtParams;
    use crate::model::Schema;

    fn sample_state() -> ModelState {
        let schema = Schema::numeric(&["x"]).with_label("y", &["a", "b"]);
        let mut tree = HoeffdingTree::new(&schema, HtParams::default()).unwrap();
        for i in 0..100 {
            let e = crate::model::Event::new(i, "k")
                .with("x", i as f64)
                .with_label(if i % 2 == 0 { "a" } else { "b" });
            tree.learn_one(&e).unwrap();
        }
        let mut log = ChangeLog::default();
        log.push(50, "ddm", "stable->warning", 0.3);
        ModelState::new(schema.fingerprint(), LearnerState::Hoeffding(tree), log)
    }

    #[test]
    fn serialize_deserialize_is_identity() {
        let state = sample_state();
        let bytes = state.to_bytes();
        let back = ModelState::from_bytes(&bytes).unwrap();
        assert_eq!(back, state);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn version_and_fingerprint_are_enforced() {
        let state = sample_state();
        let mut bytes = state.to_bytes();
        bytes[0] = 99;
        assert!(ModelState::from_bytes(&bytes).is_err());

        let bytes = state.to_bytes();
        assert!(ModelState::load_checked(&bytes, 0xdead_beef, false).is_err());
        assert!(ModelState::load_checked(&bytes, 0xdead_beef, true).is_ok());
    }

    #[test]
    fn changelog_timestamps_never_decrease() {
        let mut log = ChangeLog::default();
        log.push(100, "d", "a", 0.0);
        log.push(50, "d", "b", 0.0);
        assert!(log.entries[1].ts >= log.entries[0].ts);
    }
}
