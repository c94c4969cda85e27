use crate::model::{Event, Value};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Mergeable summary of one numeric field: count, mean, min, max. These four
/// merge exactly, which is what makes edge pre-aggregation followed by a
/// cloud-side merge equivalent to computing on the raw stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSummary {
    pub count: u64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl FieldSummary {
    fn of(x: f64) -> Self {
        FieldSummary { count: 1, mean: x, min: x, max: x }
    }

    fn observe(&mut self, x: f64) {
        self.count += 1;
        self.mean += (x - self.mean) / self.count as f64;
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&mut self, other: &FieldSummary) {
        if other.count == 0 {
            return;
        }
        let n = (self.count + other.count) as f64;
        self.mean = (self.mean * self.count as f64 + other.mean * other.count as f64) / n;
        self.count += other.count;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }
}

/// Summary of one (key, window) pair across all numeric fields seen there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct WindowSummary {
    pub fields: BTreeMap<String, FieldSummary>,
}

impl WindowSummary {
    pub fn observe_event(&mut self, e: &Event) {
        for (name, value) in &e.values {
            if let Value::Num(x) = value {
                self.fields
                    .entry(name.clone())
                    .and_modify(|s| s.observe(*x))
                    .or_insert_with(|| FieldSummary::of(*x));
            }
        }
    }

    pub fn merge(&mut self, other: &WindowSummary) {
        for (name, s) in &other.fields {
            self.fields
                .entry(name.clone())
                .and_modify(|mine| mine.merge(s))
                .or_insert_with(|| s.clone());
        }
    }

    /// Renders the summary as an event: `<field>_count/mean/min/max`.
    pub fn into_event(self, ts: i64, key: String) -> Event {
        let mut e = Event::new(ts, key).with_source("summarize");
        for (name, s) in self.fields {
            e.values.insert(format!("{name}_count"), Value::Num(s.count as f64));
            e.values.insert(format!("{name}_mean"), Value::Num(s.mean));
            e.values.insert(format!("{name}_min"), Value::Num(s.min));
            e.values.insert(format!("{name}_max"), Value::Num(s.max));
        }
        e
    }
}

/// Per-key tumbling-window summarization.
///
/// Windows are aligned to multiples of `window_ms`; a summary event carries
/// `ts = window end` and is emitted once the watermark passes that end.
/// Events inside a window are buffered and folded in a canonical order at
/// close, so the emitted numbers do not depend on arrival interleaving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summarizer {
    pub window_ms: i64,
    open: BTreeMap<(i64, String), Vec<Event>>,
    watermark: i64,
}

impl Summarizer {
    pub fn new(window_ms: i64) -> Self {
        assert!(window_ms > 0);
        Summarizer {
            window_ms,
            open: BTreeMap::new(),
            watermark: i64::MIN,
        }
    }

    pub fn push(&mut self, e: Event) {
        let start = e.ts.div_euclid(self.window_ms) * self.window_ms;
        self.open.entry((start, e.key.clone())).or_default().push(e);
    }

    /// Closes every window whose end the watermark has passed and returns
    /// the summary events in (window, key) order.
    pub fn advance_watermark(&mut self, wm: i64) -> Vec<Event> {
        self.watermark = self.watermark.max(wm);
        let window_ms = self.window_ms;
        let watermark = self.watermark;
        let ready: Vec<(i64, String)> = self
            .open
            .keys()
            .filter(|(start, _)| start.saturating_add(window_ms) <= watermark)
            .cloned()
            .collect();
        let mut out = Vec::new();
        for key in ready {
            let mut events = self.open.remove(&key).unwrap();
            // Canonical fold order: by time, then by encoded content.
            events.sort_by(|a, b| {
                a.ts.cmp(&b.ts)
                    .then_with(|| crate::connectors::encode_event(a).cmp(&crate::connectors::encode_event(b)))
            });
            let mut summary = WindowSummary::default();
            for e in &events {
                summary.observe_event(e);
            }
            out.push(summary.into_event(key.0 + window_ms, key.1));
        }
        out
    }

    pub fn open_windows(&self) -> usize {
        self.open.len()
    }
}
