use crate::model::Placement;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OpMetrics {
    pub events_in: u64,
    pub events_out: u64,
    pub queue_depth: u64,
}

/// One monitoring interval of a run: per-operator flow counters, per-node
/// CPU utilization, and end-to-end latency percentiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MetricsFrame {
    pub interval: u64,
    pub per_op: BTreeMap<String, OpMetrics>,
    pub node_util: BTreeMap<String, f64>,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub throughput_eps: f64,
}

impl MetricsFrame {
    pub fn percentile(samples: &mut [f64], q: f64) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        samples.sort_by(f64::total_cmp);
        let idx = ((samples.len() as f64 - 1.0) * q).round() as usize;
        samples[idx]
    }
}

/// Metrics CSV:
/// `interval,node,op,events_in,events_out,queue_depth,cpu_util,p50_ms,p95_ms`,
/// one row per (interval, operator).
pub fn write_metrics_csv(
    frames: &[MetricsFrame],
    placement: &Placement,
    mut w: impl Write,
) -> std::io::Result<()> {
    writeln!(
        w,
        "interval,node,op,events_in,events_out,queue_depth,cpu_util,p50_ms,p95_ms"
    )?;
    for f in frames {
        for (op, m) in &f.per_op {
            let node = placement.node_of(op).unwrap_or("");
            let util = f.node_util.get(node).copied().unwrap_or(0.0);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                f.interval, node, op, m.events_in, m.events_out, m.queue_depth, util, f.p50_ms, f.p95_ms
            )?;
        }
    }
    Ok(())
}
