use super::control::{ControlKind, ControlMessage};
use super::inputs::InputsMap;
use super::metrics::MetricsFrame;
use super::ops::{Emit, Item, OpRuntime};
use super::RuntimeError;
use crate::learn::ModelState;
use crate::model::{
    topological_order, validate_pipeline, ClusterSpec, Event, Placement, PipelineSpec,
};
use std::collections::{BTreeMap, VecDeque};

/// Everything a live run produces.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    /// Events collected at each sink, in arrival order.
    pub sink_outputs: BTreeMap<String, Vec<Event>>,
    /// Final state of every learner operator.
    pub model_states: BTreeMap<String, ModelState>,
    /// States captured by `snapshot` control messages, keyed by (seq, op).
    pub snapshots: Vec<(u64, String, ModelState)>,
    pub metrics: Vec<MetricsFrame>,
    /// Append-only log of control applications, migrations and drifts.
    pub run_log: Vec<String>,
    /// Per-operator (events_in, events_out) totals.
    pub op_counts: BTreeMap<String, (u64, u64)>,
    /// Total events fed by sources and received by sinks.
    pub source_emitted: u64,
    pub sink_received: u64,
}

impl RunOutput {
    /// Canonical byte rendering of sink outputs + model states, for
    /// equivalence comparisons.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (sink, events) in &self.sink_outputs {
            out.extend_from_slice(sink.as_bytes());
            out.push(b'\n');
            for e in events {
                out.extend_from_slice(&crate::connectors::encode_event(e));
                out.push(b'\n');
            }
        }
        for (op, state) in &self.model_states {
            out.extend_from_slice(op.as_bytes());
            out.push(b'\n');
            out.extend_from_slice(&state.to_bytes());
            out.push(b'\n');
        }
        out
    }

    /// Sink outputs as a sorted multiset of canonical records.
    pub fn output_multiset(&self) -> Vec<(String, Vec<u8>)> {
        let mut all: Vec<(String, Vec<u8>)> = self
            .sink_outputs
            .iter()
            .flat_map(|(sink, events)| {
                events
                    .iter()
                    .map(move |e| (sink.clone(), crate::connectors::encode_event(e)))
            })
            .collect();
        all.sort();
        all
    }
}

/// Edge of the execution graph with its queue.
struct EdgeState {
    from: String,
    to: String,
    to_port: usize,
    queue: VecDeque<Item>,
    sent: u64,
    received: u64,
}

/// Single-threaded reference execution. Events are drawn from the merged
/// source feed ordered by `(ts, source id, per-source sequence)`; each is
/// pushed through the graph to quiescence before the next is drawn, so the
/// whole run is a pure function of `(pipeline, inputs, controls)` —
/// placement only affects bookkeeping, which is what makes placement
/// transparency testable at all.
pub fn run_deterministic(
    p: &PipelineSpec,
    _c: &ClusterSpec,
    pl: &Placement,
    inputs: &InputsMap,
    controls: &[ControlMessage],
) -> Result<RunOutput, RuntimeError> {
    let violations = validate_pipeline(p);
    if !violations.is_empty() {
        return Err(RuntimeError::Invalid(violations));
    }
    let order = topological_order(p).expect("validated");
    let topo_pos: BTreeMap<&str, usize> =
        order.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();

    let mut ops: BTreeMap<String, OpRuntime> = BTreeMap::new();
    for spec in &p.operators {
        ops.insert(spec.id.clone(), OpRuntime::build(spec, p)?);
    }

    // Edges sorted by (consumer topo position, declaration order) fix the
    // drain order; ports are indexed per consumer by declaration order.
    let mut edges: Vec<EdgeState> = Vec::new();
    {
        let mut port_of: BTreeMap<&str, usize> = BTreeMap::new();
        let mut declared: Vec<&crate::model::EdgeSpec> = p.edges.iter().collect();
        declared.sort_by_key(|e| (topo_pos[e.to.as_str()], topo_pos[e.from.as_str()]));
        for e in declared {
            let port = *port_of
                .entry(e.to.as_str())
                .and_modify(|x| *x += 1)
                .or_insert(0);
            edges.push(EdgeState {
                from: e.from.clone(),
                to: e.to.clone(),
                to_port: port,
                queue: VecDeque::new(),
                sent: 0,
                received: 0,
            });
        }
    }

    let mut placement = pl.clone();
    let mut out = RunOutput::default();
    let mut metrics: BTreeMap<u64, MetricsFrame> = BTreeMap::new();

    // Merged source feed: (ts, source id, seq) ascending.
    let mut feeds: Vec<(String, VecDeque<Event>)> = inputs
        .iter()
        .map(|(id, events)| (id.clone(), events.iter().cloned().collect()))
        .collect();
    let mut source_wm: BTreeMap<String, i64> = BTreeMap::new();

    let mut pending_controls: VecDeque<&ControlMessage> = controls.iter().collect();
    let mut next_seq = 0u64;
    let mut global_idx = 0u64;
    let mut shutdown = false;

    // One scratch buffer reused across dispatches.
    let mut emitted: Vec<Emit> = Vec::new();

    loop {
        // Apply control messages due at this event boundary.
        while let Some(msg) = pending_controls.front() {
            if msg.at_event > global_idx {
                break;
            }
            let msg = pending_controls.pop_front().unwrap();
            if msg.seq != next_seq {
                return Err(RuntimeError::OutOfOrderControl {
                    got: msg.seq,
                    expected: next_seq,
                });
            }
            next_seq += 1;
            apply_control(msg, global_idx, &mut ops, &mut placement, _c, p, &mut out, &mut shutdown)?;
        }
        if shutdown {
            break;
        }

        // Next source event across feeds by (ts, source id, seq).
        let next = feeds
            .iter()
            .enumerate()
            .filter_map(|(i, (id, q))| q.front().map(|e| (e.ts, id.clone(), i)))
            .min();
        let Some((_, source_id, feed_idx)) = next else {
            break;
        };
        let event = feeds[feed_idx].1.pop_front().unwrap();
        let interval = (event.ts.max(0) as u64) / 1000;
        out.source_emitted += 1;
        global_idx += 1;

        // The source op emits the event, then its watermark.
        let wm_entry = source_wm.entry(source_id.clone()).or_insert(i64::MIN);
        *wm_entry = (*wm_entry).max(event.ts);
        let wm = *wm_entry;
        dispatch(
            &source_id,
            Item::Event(event),
            0,
            &mut ops,
            &mut edges,
            &mut out,
            interval,
            &mut metrics,
            &mut emitted,
        )?;
        dispatch(
            &source_id,
            Item::Watermark(wm),
            0,
            &mut ops,
            &mut edges,
            &mut out,
            interval,
            &mut metrics,
            &mut emitted,
        )?;
        drain(&mut ops, &mut edges, &mut out, interval, &mut metrics, &mut emitted)?;
    }

    // Drain: final watermark from every source, in id order.
    let source_ids: Vec<String> = feeds.iter().map(|(id, _)| id.clone()).collect();
    for source_id in source_ids {
        dispatch(
            &source_id,
            Item::Watermark(i64::MAX),
            0,
            &mut ops,
            &mut edges,
            &mut out,
            u64::MAX,
            &mut metrics,
            &mut emitted,
        )?;
    }
    drain(&mut ops, &mut edges, &mut out, u64::MAX, &mut metrics, &mut emitted)?;

    // Conservation: every queue empty, every edge balanced.
    for e in &edges {
        debug_assert_eq!(e.queue.len(), 0);
        debug_assert_eq!(e.sent, e.received);
    }

    finish(p, &placement, ops, metrics, &mut out);
    Ok(out)
}

/// Runs one item through an operator and enqueues its emissions.
#[allow(clippy::too_many_arguments)]
fn dispatch(
    op_id: &str,
    item: Item,
    port: usize,
    ops: &mut BTreeMap<String, OpRuntime>,
    edges: &mut [EdgeState],
    out: &mut RunOutput,
    interval: u64,
    metrics: &mut BTreeMap<u64, MetricsFrame>,
    emitted: &mut Vec<Emit>,
) -> Result<(), RuntimeError> {
    emitted.clear();
    let op = ops
        .get_mut(op_id)
        .ok_or_else(|| RuntimeError::UnknownOperator(op_id.to_string()))?;
    let is_event = matches!(item, Item::Event(_));
    op.on_item(port, item, emitted)?;
    let is_sink = matches!(op.kind, crate::model::OpKind::Sink);
    if is_sink && is_event {
        out.sink_received += 1;
    }
    if interval != u64::MAX && (is_event || !emitted.is_empty()) {
        let frame = metrics.entry(interval).or_insert_with(|| MetricsFrame {
            interval,
            ..Default::default()
        });
        let m = frame.per_op.entry(op_id.to_string()).or_default();
        if is_event {
            m.events_in += 1;
        }
        m.events_out += emitted
            .iter()
            .filter(|em| !matches!(em, Emit::Watermark(_)))
            .count() as u64;
    }
    // Enqueue emissions onto out-edges.
    for emit in emitted.drain(..) {
        match emit {
            Emit::Broadcast(e) => {
                for edge in edges.iter_mut().filter(|ed| ed.from == op_id) {
                    edge.queue.push_back(Item::Event(e.clone()));
                    edge.sent += 1;
                }
            }
            Emit::To(target, e) => {
                for edge in edges
                    .iter_mut()
                    .filter(|ed| ed.from == op_id && ed.to == target)
                {
                    edge.queue.push_back(Item::Event(e.clone()));
                    edge.sent += 1;
                }
            }
            Emit::Watermark(wm) => {
                for edge in edges.iter_mut().filter(|ed| ed.from == op_id) {
                    edge.queue.push_back(Item::Watermark(wm));
                }
            }
        }
    }
    Ok(())
}

/// Processes queued items to quiescence, scanning edges in the fixed
/// (consumer topo position, declaration) order.
fn drain(
    ops: &mut BTreeMap<String, OpRuntime>,
    edges: &mut Vec<EdgeState>,
    out: &mut RunOutput,
    interval: u64,
    metrics: &mut BTreeMap<u64, MetricsFrame>,
    emitted: &mut Vec<Emit>,
) -> Result<(), RuntimeError> {
    loop {
        let Some(idx) = edges.iter().position(|e| !e.queue.is_empty()) else {
            return Ok(());
        };
        let item = edges[idx].queue.pop_front().unwrap();
        if matches!(item, Item::Event(_)) {
            edges[idx].received += 1;
        }
        let (to, port) = (edges[idx].to.clone(), edges[idx].to_port);
        dispatch(&to, item, port, ops, edges, out, interval, metrics, emitted)?;
    }
}

#[allow(clippy::too_many_arguments)]
fn apply_control(
    msg: &ControlMessage,
    global_idx: u64,
    ops: &mut BTreeMap<String, OpRuntime>,
    placement: &mut Placement,
    c: &ClusterSpec,
    p: &PipelineSpec,
    out: &mut RunOutput,
    shutdown: &mut bool,
) -> Result<(), RuntimeError> {
    match &msg.kind {
        ControlKind::Shutdown => {
            out.run_log
                .push(format!("control seq={} shutdown at event={global_idx}", msg.seq));
            *shutdown = true;
            return Ok(());
        }
        _ => {}
    }
    let op = ops
        .get_mut(&msg.target)
        .ok_or_else(|| RuntimeError::UnknownOperator(msg.target.clone()))?;
    match &msg.kind {
        ControlKind::SetSampleRate { rate } => {
            op.set_sample_rate(*rate)?;
            out.run_log.push(format!(
                "control seq={} set_sample_rate op={} rate={rate} at event={global_idx}",
                msg.seq, msg.target
            ));
        }
        ControlKind::Migrate { to } => {
            // Capacity check at apply time; a rejected migration leaves the
            // placement unchanged and the run continues.
            let infeasible = match c.node(to) {
                None => Some(format!("unknown node {to}")),
                Some(node) => {
                    let mem_after: f64 = p
                        .operators
                        .iter()
                        .filter(|o| {
                            o.id == msg.target || placement.node_of(&o.id) == Some(to.as_str())
                        })
                        .map(|o| o.mem_demand)
                        .sum();
                    (mem_after > node.mem_capacity)
                        .then(|| format!("{to} memory {mem_after} MB over capacity"))
                }
            };
            if let Some(reason) = infeasible {
                out.run_log.push(format!(
                    "control seq={} migrate op={} to={to} rejected: {reason}",
                    msg.seq, msg.target
                ));
                return Ok(());
            }
            let from = placement.node_of(&msg.target).unwrap_or("?").to_string();
            // Pause-drain-transfer-resume collapses to a serialize/restore
            // round trip in a single process.
            *op = op.migrate_state()?;
            placement.assign(&msg.target, to);
            out.run_log.push(format!(
                "control seq={} migrate op={} from={from} to={to} at event={global_idx}",
                msg.seq, msg.target
            ));
        }
        ControlKind::Snapshot => {
            if let Some(state) = op.model_state() {
                out.snapshots.push((msg.seq, msg.target.clone(), state));
            }
            out.run_log.push(format!(
                "control seq={} snapshot op={} at event={global_idx}",
                msg.seq, msg.target
            ));
        }
        ControlKind::Shutdown => unreachable!(),
    }
    Ok(())
}

fn finish(
    p: &PipelineSpec,
    placement: &Placement,
    mut ops: BTreeMap<String, OpRuntime>,
    metrics: BTreeMap<u64, MetricsFrame>,
    out: &mut RunOutput,
) {
    let mut frames: Vec<MetricsFrame> = metrics.into_values().collect();
    // Estimated node utilization per interval from processed-event counts.
    for frame in &mut frames {
        let mut node_ms: BTreeMap<String, f64> = BTreeMap::new();
        for (op_id, m) in &frame.per_op {
            if let (Some(spec), Some(node)) = (p.operator(op_id), placement.node_of(op_id)) {
                *node_ms.entry(node.to_string()).or_insert(0.0) +=
                    m.events_in as f64 * spec.cpu_demand;
            }
        }
        for (node, demand_ms) in node_ms {
            frame.node_util.insert(node, demand_ms / 1000.0 / 1000.0);
        }
    }
    out.metrics = frames;

    for (id, op) in ops.iter_mut() {
        out.op_counts.insert(id.clone(), (op.events_in, op.events_out));
        let sunk = op.take_sink();
        if !sunk.is_empty() || matches!(op.kind, crate::model::OpKind::Sink) {
            out.sink_outputs.insert(id.clone(), sunk);
        }
        if let Some(state) = op.model_state() {
            out.model_states.insert(id.clone(), state);
        }
    }
    for frame in &mut out.metrics {
        for (op_id, m) in frame.per_op.iter_mut() {
            if let Some(op) = ops.get(op_id) {
                m.queue_depth = op.queue_hint();
            }
        }
    }
}
