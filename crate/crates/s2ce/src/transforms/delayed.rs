use super::TransformError;
use crate::model::Event;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// What the delayed-label join emits as the watermark advances.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DelayedOutput {
    pub labeled: Vec<Event>,
    pub expired: Vec<Event>,
}

/// Pairs unlabeled instances with labels that arrive later under the same
/// `instance_id`.
///
/// An instance waits until the watermark passes `ts + timeout_ms`; if no
/// label arrived by then it is emitted unlabeled on the expiry stream. Every
/// instance leaves exactly once, on exactly one of the two outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayedLabelJoin {
    pub timeout_ms: i64,
    pending: BTreeMap<String, Event>,
    /// Labels that arrived before their instance; first label wins.
    early_labels: BTreeMap<String, Event>,
    watermark: i64,
}

impl DelayedLabelJoin {
    pub fn new(timeout_ms: i64) -> Self {
        DelayedLabelJoin {
            timeout_ms,
            pending: BTreeMap::new(),
            early_labels: BTreeMap::new(),
            watermark: i64::MIN,
        }
    }

    /// Feeds an unlabeled instance. Returns the labeled event immediately if
    /// its label already arrived.
    pub fn push_instance(&mut self, e: Event) -> Result<Option<Event>, TransformError> {
        let id = e
            .instance_id
            .clone()
            .ok_or(TransformError::MissingInstanceId)?;
        if let Some(label_event) = self.early_labels.remove(&id) {
            return Ok(Some(apply_label(e, &label_event)));
        }
        if self.pending.contains_key(&id) {
            return Err(TransformError::DuplicateInstance(id));
        }
        self.pending.insert(id, e);
        Ok(None)
    }

    /// Feeds a label event. Returns the joined instance when one is waiting.
    pub fn push_label(&mut self, e: Event) -> Result<Option<Event>, TransformError> {
        let id = e
            .instance_id
            .clone()
            .ok_or(TransformError::MissingInstanceId)?;
        if e.label.is_none() {
            return Err(TransformError::MissingLabel);
        }
        if let Some(instance) = self.pending.remove(&id) {
            return Ok(Some(apply_label(instance, &e)));
        }
        // Buffer ahead-of-instance labels; keep the first one per id.
        self.early_labels.entry(id).or_insert(e);
        Ok(None)
    }

    /// Advances event time and expires instances whose deadline passed.
    /// Expired instances are returned in id order for determinism.
    pub fn advance_watermark(&mut self, wm: i64) -> DelayedOutput {
        self.watermark = self.watermark.max(wm);
        let mut out = DelayedOutput::default();
        let timeout = self.timeout_ms;
        let watermark = self.watermark;
        let expired_ids: Vec<String> = self
            .pending
            .iter()
            .filter(|(_, e)| e.ts.saturating_add(timeout) < watermark)
            .map(|(id, _)| id.clone())
            .collect();
        for id in expired_ids {
            out.expired.push(self.pending.remove(&id).unwrap());
        }
        // Unclaimed early labels expire on the same horizon.
        self.early_labels
            .retain(|_, e| e.ts.saturating_add(timeout) >= watermark);
        out
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }
}

fn apply_label(mut instance: Event, label_event: &Event) -> Event {
    instance.label = label_event.label.clone();
    instance
}
