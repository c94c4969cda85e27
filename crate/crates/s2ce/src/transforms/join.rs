use super::TransformError;
use crate::model::Event;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};

/// Symmetric time-windowed stream join.
///
/// Emits one merged event per pair `(l, r)` with equal key and
/// `|l.ts - r.ts| <= delta_ms`, in join-completion order. Right-side fields
/// are prefixed `r_` in the merged record; the merged timestamp is the later
/// of the two. Buffered state below `min(watermarks) - delta_ms` is evicted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowJoin {
    pub delta_ms: i64,
    left: BTreeMap<String, VecDeque<Event>>,
    right: BTreeMap<String, VecDeque<Event>>,
    wm_left: i64,
    wm_right: i64,
}

impl WindowJoin {
    pub fn new(delta_ms: i64) -> Self {
        WindowJoin {
            delta_ms,
            left: BTreeMap::new(),
            right: BTreeMap::new(),
            wm_left: i64::MIN,
            wm_right: i64::MIN,
        }
    }

    pub fn push_left(&mut self, e: Event) -> Result<Vec<Event>, TransformError> {
        let mut out = Vec::new();
        if let Some(partners) = self.right.get(&e.key) {
            for r in partners {
                if (e.ts - r.ts).abs() <= self.delta_ms {
                    out.push(merge(&e, r)?);
                }
            }
        }
        insert_sorted(self.left.entry(e.key.clone()).or_default(), e);
        Ok(out)
    }

    pub fn push_right(&mut self, e: Event) -> Result<Vec<Event>, TransformError> {
        let mut out = Vec::new();
        if let Some(partners) = self.left.get(&e.key) {
            for l in partners {
                if (l.ts - e.ts).abs() <= self.delta_ms {
                    out.push(merge(l, &e)?);
                }
            }
        }
        insert_sorted(self.right.entry(e.key.clone()).or_default(), e);
        Ok(out)
    }

    pub fn advance_left_watermark(&mut self, wm: i64) {
        self.wm_left = self.wm_left.max(wm);
        self.evict();
    }

    pub fn advance_right_watermark(&mut self, wm: i64) {
        self.wm_right = self.wm_right.max(wm);
        self.evict();
    }

    /// Combined watermark: no event on either side will arrive below this.
    pub fn watermark(&self) -> i64 {
        self.wm_left.min(self.wm_right)
    }

    fn evict(&mut self) {
        let wm = self.watermark();
        if wm == i64::MIN {
            return;
        }
        let horizon = wm.saturating_sub(self.delta_ms);
        for side in [&mut self.left, &mut self.right] {
            side.retain(|_, buf| {
                while buf.front().is_some_and(|e| e.ts < horizon) {
                    buf.pop_front();
                }
                !buf.is_empty()
            });
        }
    }

    pub fn buffered(&self) -> usize {
        self.left.values().map(VecDeque::len).sum::<usize>()
            + self.right.values().map(VecDeque::len).sum::<usize>()
    }
}

fn insert_sorted(buf: &mut VecDeque<Event>, e: Event) {
    // Buffers stay time-sorted; inputs are mostly in order already.
    let pos = buf.partition_point(|x| x.ts <= e.ts);
    buf.insert(pos, e);
}

fn merge(l: &Event, r: &Event) -> Result<Event, TransformError> {
    let mut merged = l.clone();
    merged.ts = l.ts.max(r.ts);
    merged.label = l.label.clone().or_else(|| r.label.clone());
    for (name, value) in &r.values {
        let prefixed = format!("r_{name}");
        if merged.values.contains_key(&prefixed) {
            return Err(TransformError::FieldCollision(prefixed));
        }
        merged.values.insert(prefixed, value.clone());
    }
    Ok(merged)
}
