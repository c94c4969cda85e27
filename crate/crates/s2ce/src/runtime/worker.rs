use super::det::RunOutput;
use super::inputs::InputsMap;
use super::metrics::MetricsFrame;
use super::ops::{Emit, Item, OpRuntime};
use super::RuntimeError;
use crate::model::{
    topological_order, validate_pipeline, ClusterSpec, OpKind, Placement, PipelineSpec,
};
use crate::orchestrate::RuntimeKnobs;
use crossbeam_channel::{bounded, Receiver, Select, Sender};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

type Batch = Vec<Item>;

/// Per-worker wiring: input channels (one per in-edge, port order), output
/// channels with the id of the consumer they lead to.
struct Wiring {
    op: OpRuntime,
    spec_kind: OpKind,
    rxs: Vec<Receiver<Batch>>,
    txs: Vec<(String, Sender<Batch>)>,
}

/// One worker per operator over bounded channels with blocking
/// backpressure. Events travel in batches of up to `knobs.batch_size`
/// items; stateless stages fan each batch across `knobs.parallelism`
/// scoped threads, order preserved. The output multiset equals the
/// deterministic run's.
///
/// A watchdog aborts the run with [`RuntimeError::Deadlock`] after 10
/// seconds without global progress.
pub fn run_concurrent(
    p: &PipelineSpec,
    _c: &ClusterSpec,
    _pl: &Placement,
    inputs: &InputsMap,
    knobs: &RuntimeKnobs,
) -> Result<RunOutput, RuntimeError> {
    let violations = validate_pipeline(p);
    if !violations.is_empty() {
        return Err(RuntimeError::Invalid(violations));
    }
    let order = topological_order(p).expect("validated");
    let topo_pos: BTreeMap<&str, usize> =
        order.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let batch_size = knobs.batch_size.max(1);
    let queue_capacity = knobs.queue_capacity.max(1);
    let parallelism = knobs.parallelism.max(1);

    // Channels per edge, ports indexed by declaration order per consumer.
    let mut senders: BTreeMap<String, Vec<(String, Sender<Batch>)>> = BTreeMap::new();
    let mut receivers: BTreeMap<String, Vec<Receiver<Batch>>> = BTreeMap::new();
    {
        let mut declared: Vec<&crate::model::EdgeSpec> = p.edges.iter().collect();
        declared.sort_by_key(|e| (topo_pos[e.to.as_str()], topo_pos[e.from.as_str()]));
        for e in declared {
            let (tx, rx) = bounded::<Batch>(queue_capacity);
            senders.entry(e.from.clone()).or_default().push((e.to.clone(), tx));
            receivers.entry(e.to.clone()).or_default().push(rx);
        }
    }

    let progress = Arc::new(AtomicU64::new(0));
    let failed = Arc::new(AtomicBool::new(false));
    let (done_tx, done_rx) = bounded::<Result<OpRuntime, RuntimeError>>(p.operators.len());

    let mut handles = Vec::new();
    for spec in &p.operators {
        let wiring = Wiring {
            op: OpRuntime::build(spec, p)?,
            spec_kind: spec.kind,
            rxs: receivers.remove(&spec.id).unwrap_or_default(),
            txs: senders.remove(&spec.id).unwrap_or_default(),
        };
        let feed = if spec.kind == OpKind::Source {
            inputs.get(&spec.id).cloned().unwrap_or_default()
        } else {
            Vec::new()
        };
        let progress = Arc::clone(&progress);
        let failed = Arc::clone(&failed);
        let done_tx = done_tx.clone();
        handles.push(std::thread::spawn(move || {
            let result = run_worker(wiring, feed, batch_size, parallelism, &progress, &failed);
            if result.is_err() {
                failed.store(true, Ordering::SeqCst);
            }
            let _ = done_tx.send(result);
        }));
    }
    drop(done_tx);

    // Watchdog: global progress must move while workers are alive.
    let mut outputs: Vec<OpRuntime> = Vec::new();
    let mut last_progress = progress.load(Ordering::SeqCst);
    let mut last_move = Instant::now();
    let mut first_error: Option<RuntimeError> = None;
    let mut finished = 0usize;
    while finished < p.operators.len() {
        match done_rx.recv_timeout(Duration::from_millis(200)) {
            Ok(Ok(op)) => {
                finished += 1;
                outputs.push(op);
            }
            Ok(Err(e)) => {
                finished += 1;
                if first_error.is_none() {
                    first_error = Some(e);
                }
            }
            Err(_) => {
                let now_progress = progress.load(Ordering::SeqCst);
                if now_progress != last_progress {
                    last_progress = now_progress;
                    last_move = Instant::now();
                } else if last_move.elapsed() > Duration::from_secs(10) {
                    failed.store(true, Ordering::SeqCst);
                    return Err(RuntimeError::Deadlock(last_move.elapsed()));
                }
            }
        }
    }
    for h in handles {
        let _ = h.join();
    }
    if let Some(e) = first_error {
        return Err(e);
    }

    let mut out = RunOutput::default();
    for mut op in outputs {
        out.op_counts.insert(op.id.clone(), (op.events_in, op.events_out));
        if matches!(op.kind, OpKind::Sink) {
            let events = op.take_sink();
            out.sink_received += events.len() as u64;
            out.sink_outputs.insert(op.id.clone(), events);
        }
        if op.kind == OpKind::Source {
            out.source_emitted += op.events_in;
        }
        if let Some(state) = op.model_state() {
            out.model_states.insert(op.id.clone(), state);
        }
    }
    out.metrics = vec![MetricsFrame {
        interval: 0,
        per_op: out
            .op_counts
            .iter()
            .map(|(id, (i, o))| {
                (
                    id.clone(),
                    super::metrics::OpMetrics {
                        events_in: *i,
                        events_out: *o,
                        queue_depth: 0,
                    },
                )
            })
            .collect(),
        node_util: BTreeMap::new(),
        p50_ms: 0.0,
        p95_ms: 0.0,
        throughput_eps: 0.0,
    }];
    Ok(out)
}

fn run_worker(
    mut w: Wiring,
    feed: Vec<crate::model::Event>,
    batch_size: usize,
    parallelism: usize,
    progress: &AtomicU64,
    failed: &AtomicBool,
) -> Result<OpRuntime, RuntimeError> {
    let mut out_buffers: Vec<Batch> = w.txs.iter().map(|_| Vec::with_capacity(batch_size)).collect();

    if w.spec_kind == OpKind::Source {
        let mut wm = i64::MIN;
        let mut emitted = Vec::new();
        for event in feed {
            if failed.load(Ordering::Relaxed) {
                break;
            }
            wm = wm.max(event.ts);
            emitted.clear();
            w.op.on_item(0, Item::Event(event), &mut emitted)?;
            route(&mut w.txs, &mut out_buffers, &mut emitted, batch_size)?;
            // Watermark after each event, same cadence as the deterministic
            // engine; it rides in the batch, so batching still applies.
            emitted.clear();
            w.op.on_item(0, Item::Watermark(wm), &mut emitted)?;
            route(&mut w.txs, &mut out_buffers, &mut emitted, batch_size)?;
            progress.fetch_add(1, Ordering::Relaxed);
        }
        let mut emitted = Vec::new();
        w.op.on_item(0, Item::Watermark(i64::MAX), &mut emitted)?;
        route(&mut w.txs, &mut out_buffers, &mut emitted, batch_size)?;
        flush_all(&mut w.txs, &mut out_buffers)?;
        return Ok(w.op);
    }

    // Consumer loop: select across live input ports.
    let mut open: Vec<bool> = w.rxs.iter().map(|_| true).collect();
    let mut emitted = Vec::new();
    let parallel_map = parallelism > 1 && w.op.is_stateless_map();
    while open.iter().any(|o| *o) {
        if failed.load(Ordering::Relaxed) {
            break;
        }
        let mut select = Select::new();
        let live: Vec<usize> = (0..w.rxs.len()).filter(|i| open[*i]).collect();
        for &i in &live {
            select.recv(&w.rxs[i]);
        }
        let chosen = select.select_timeout(Duration::from_millis(100));
        let Ok(op_result) = chosen else { continue };
        let idx = live[op_result.index()];
        match op_result.recv(&w.rxs[idx]) {
            Err(_) => {
                open[idx] = false;
            }
            Ok(batch) => {
                progress.fetch_add(batch.len() as u64, Ordering::Relaxed);
                if parallel_map {
                    process_batch_parallel(&mut w.op, idx, batch, parallelism, &mut emitted)?;
                } else {
                    for item in batch {
                        w.op.on_item(idx, item, &mut emitted)?;
                    }
                }
                route(&mut w.txs, &mut out_buffers, &mut emitted, batch_size)?;
                emitted.clear();
            }
        }
    }
    flush_all(&mut w.txs, &mut out_buffers)?;
    Ok(w.op)
}

/// Maps a batch across scoped threads for a stateless operator, preserving
/// input order; watermarks pass through in place.
fn process_batch_parallel(
    op: &mut OpRuntime,
    port: usize,
    batch: Batch,
    parallelism: usize,
    emitted: &mut Vec<Emit>,
) -> Result<(), RuntimeError> {
    let events: Vec<(usize, crate::model::Event)> = batch
        .iter()
        .enumerate()
        .filter_map(|(i, item)| match item {
            Item::Event(e) => Some((i, e.clone())),
            Item::Watermark(_) => None,
        })
        .collect();

    let mut mapped: BTreeMap<usize, Vec<crate::model::Event>> = BTreeMap::new();
    if events.len() >= parallelism * 2 {
        let chunk = events.len().div_ceil(parallelism);
        let op_ref = &*op;
        let results: Vec<Result<Vec<(usize, Vec<crate::model::Event>)>, RuntimeError>> =
            std::thread::scope(|scope| {
                events
                    .chunks(chunk)
                    .map(|slice| {
                        scope.spawn(move || {
                            slice
                                .iter()
                                .map(|(i, e)| op_ref.map_stateless(e.clone()).map(|v| (*i, v)))
                                .collect()
                        })
                    })
                    .collect::<Vec<_>>()
                    .into_iter()
                    .map(|h| h.join().expect("map worker panicked"))
                    .collect()
            });
        for r in results {
            for (i, v) in r? {
                mapped.insert(i, v);
            }
        }
    } else {
        for (i, e) in events {
            mapped.insert(i, op.map_stateless(e)?);
        }
    }

    for (i, item) in batch.into_iter().enumerate() {
        match item {
            Item::Event(_) => {
                op.events_in += 1;
                for e in mapped.remove(&i).unwrap_or_default() {
                    op.events_out += 1;
                    emitted.push(Emit::Broadcast(e));
                }
            }
            Item::Watermark(wm) => op.on_item(port, Item::Watermark(wm), emitted)?,
        }
    }
    Ok(())
}

/// Routes emissions into per-edge buffers, flushing full ones.
fn route(
    txs: &mut [(String, Sender<Batch>)],
    buffers: &mut [Batch],
    emitted: &mut Vec<Emit>,
    batch_size: usize,
) -> Result<(), RuntimeError> {
    for emit in emitted.drain(..) {
        match emit {
            Emit::Broadcast(e) => {
                for (buf, _) in buffers.iter_mut().zip(txs.iter()) {
                    buf.push(Item::Event(e.clone()));
                }
            }
            Emit::To(target, e) => {
                for (buf, (to, _)) in buffers.iter_mut().zip(txs.iter()) {
                    if *to == target {
                        buf.push(Item::Event(e.clone()));
                    }
                }
            }
            Emit::Watermark(wm) => {
                for (buf, _) in buffers.iter_mut().zip(txs.iter()) {
                    buf.push(Item::Watermark(wm));
                }
            }
        }
    }
    for (buf, (_, tx)) in buffers.iter_mut().zip(txs.iter()) {
        if buf.len() >= batch_size {
            let full = std::mem::replace(buf, Vec::with_capacity(batch_size));
            // Blocking send: backpressure, never drop.
            if tx.send(full).is_err() {
                // Downstream is gone; only happens after a failure abort.
                buf.clear();
            }
        }
    }
    Ok(())
}

fn flush_all(
    txs: &mut [(String, Sender<Batch>)],
    buffers: &mut [Batch],
) -> Result<(), RuntimeError> {
    for (buf, (_, tx)) in buffers.iter_mut().zip(txs.iter()) {
        if !buf.is_empty() {
            let full = std::mem::take(buf);
            let _ = tx.send(full);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EdgeSpec, Event, NodeSpec, OperatorSpec, SlaSpec};
    use crate::runtime::det::run_deterministic;

    fn cluster() -> ClusterSpec {
        ClusterSpec {
            nodes: vec![NodeSpec::cloud("n1", 8.0, 8192.0, 0.5)],
            links: vec![],
        }
    }

    fn place_all(p: &PipelineSpec, node: &str) -> Placement {
        let mut pl = Placement::default();
        for op in &p.operators {
            pl.assign(&op.id, node);
        }
        pl
    }

    fn chain() -> PipelineSpec {
        PipelineSpec {
            operators: vec![
                OperatorSpec::new("src", OpKind::Source),
                OperatorSpec::new("norm", OpKind::Normalize),
                OperatorSpec::new("out", OpKind::Sink),
            ],
            edges: vec![EdgeSpec::new("src", "norm"), EdgeSpec::new("norm", "out")],
            sla: SlaSpec::default(),
            seed: 3,
            schema: None,
        }
    }

    fn inputs(n: i64) -> InputsMap {
        let mut m = InputsMap::new();
        m.insert(
            "src".into(),
            (0..n).map(|i| Event::new(i, "k").with("x", (i % 17) as f64)).collect(),
        );
        m
    }

    #[test]
    fn single_chain_preserves_order_and_matches_deterministic() {
        let p = chain();
        let c = cluster();
        let pl = place_all(&p, "n1");
        let ins = inputs(2000);
        let det = run_deterministic(&p, &c, &pl, &ins, &[]).unwrap();
        let conc = run_concurrent(&p, &c, &pl, &ins, &RuntimeKnobs::default()).unwrap();
        // A chain has no reordering freedom at all.
        assert_eq!(conc.sink_outputs["out"], det.sink_outputs["out"]);
    }

    #[test]
    fn diamond_topology_matches_deterministic_as_a_multiset() {
        let p = PipelineSpec {
            operators: vec![
                OperatorSpec::new("src", OpKind::Source),
                OperatorSpec::new("a", OpKind::Identity),
                OperatorSpec::new("b", OpKind::Identity),
                OperatorSpec::new("out", OpKind::Sink),
            ],
            edges: vec![
                EdgeSpec::new("src", "a"),
                EdgeSpec::new("src", "b"),
                EdgeSpec::new("a", "out"),
                EdgeSpec::new("b", "out"),
            ],
            sla: SlaSpec::default(),
            seed: 4,
            schema: None,
        };
        let c = cluster();
        let pl = place_all(&p, "n1");
        let ins = inputs(1500);
        let det = run_deterministic(&p, &c, &pl, &ins, &[]).unwrap();
        let conc = run_concurrent(&p, &c, &pl, &ins, &RuntimeKnobs::default()).unwrap();
        assert_eq!(conc.output_multiset(), det.output_multiset());
        assert_eq!(conc.sink_received, 3000);
    }

    #[test]
    fn queue_capacity_one_still_completes() {
        let p = chain();
        let c = cluster();
        let pl = place_all(&p, "n1");
        let knobs = RuntimeKnobs {
            batch_size: 1,
            parallelism: 1,
            queue_capacity: 1,
        };
        let out = run_concurrent(&p, &c, &pl, &inputs(500), &knobs).unwrap();
        assert_eq!(out.sink_received, 500);
    }

    #[test]
    fn parallel_stateless_stage_preserves_order() {
        let p = PipelineSpec {
            operators: vec![
                OperatorSpec::new("src", OpKind::Source),
                OperatorSpec::new("proj", OpKind::HashProject)
                    .with_param("d", 8)
                    .with_param("salt", 9),
                OperatorSpec::new("out", OpKind::Sink),
            ],
            edges: vec![EdgeSpec::new("src", "proj"), EdgeSpec::new("proj", "out")],
            sla: SlaSpec::default(),
            seed: 5,
            schema: None,
        };
        let c = cluster();
        let pl = place_all(&p, "n1");
        let ins = inputs(3000);
        let serial = run_concurrent(&p, &c, &pl, &ins, &RuntimeKnobs::default()).unwrap();
        let parallel = run_concurrent(
            &p,
            &c,
            &pl,
            &ins,
            &RuntimeKnobs {
                batch_size: 128,
                parallelism: 4,
                queue_capacity: 64,
            },
        )
        .unwrap();
        assert_eq!(serial.sink_outputs["out"], parallel.sink_outputs["out"]);
    }
}
