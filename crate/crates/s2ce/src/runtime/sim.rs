use super::metrics::{MetricsFrame, OpMetrics};
use super::RuntimeError;
use crate::model::{
    topological_order, validate_cluster, validate_pipeline, ClusterSpec, Placement, PipelineSpec,
};
use crate::orchestrate::{
    estimate_cost, offload_step, ControllerState, CostModelCfg, MigrationPlan, Objective,
    UtilizationSample,
};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering as CmpOrdering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

/// Piecewise-constant input rate: `(from_interval, events_per_second)`
/// steps, later entries overriding earlier ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSchedule {
    pub steps: Vec<(u64, f64)>,
}

impl WorkloadSchedule {
    pub fn constant(eps: f64) -> Self {
        WorkloadSchedule { steps: vec![(0, eps)] }
    }

    pub fn eps_at(&self, interval: u64) -> f64 {
        let mut eps = 0.0;
        for (from, rate) in &self.steps {
            if interval >= *from {
                eps = *rate;
            }
        }
        eps
    }
}

/// One controller decision as written to `decisions.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRow {
    pub interval: u64,
    pub node: String,
    pub action: String,
    pub operator: String,
    pub pre_p95_ms: f64,
    pub post_p95_ms: f64,
}

pub fn write_decisions_csv(
    rows: &[DecisionRow],
    mut w: impl std::io::Write,
) -> std::io::Result<()> {
    writeln!(w, "interval,node,action,operator,pre_p95_ms,post_p95_ms")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.interval, r.node, r.action, r.operator, r.pre_p95_ms, r.post_p95_ms
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default)]
pub struct SimOutput {
    pub metrics: Vec<MetricsFrame>,
    pub decisions: Vec<DecisionRow>,
    pub final_placement: Placement,
}

/// Virtual time in ms; totally ordered with ties broken by insertion
/// sequence, so the simulation is deterministic.
#[derive(Debug, Clone, Copy, PartialEq)]
struct TimeKey(f64);

impl Eq for TimeKey {}

impl PartialOrd for TimeKey {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}

impl Ord for TimeKey {
    fn cmp(&self, other: &Self) -> CmpOrdering {
        self.0.total_cmp(&other.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Action {
    /// An event (tagged with its pipeline ingress time) arrives at an
    /// operator's node queue.
    Arrival { op: usize, ingress_ms: f64 },
    /// The node's server finishes its current job.
    ServiceDone { node: usize },
    /// A source draws its next inter-arrival gap.
    SourceTick { op: usize },
    /// Metrics + controller boundary.
    IntervalEnd { interval: u64 },
    /// A migration transfer completes; the operator switches nodes.
    MigrationDone { op: usize, to: usize },
}

struct SimEvent {
    at: TimeKey,
    seq: u64,
    action: Action,
}

impl PartialEq for SimEvent {
    fn eq(&self, other: &Self) -> bool {
        self.at == other.at && self.seq == other.seq
    }
}
impl Eq for SimEvent {}
impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}
impl Ord for SimEvent {
    fn cmp(&self, other: &Self) -> CmpOrdering {
        // BinaryHeap is a max-heap; invert for earliest-first.
        other.at.cmp(&self.at).then(other.seq.cmp(&self.seq))
    }
}

struct Clock {
    heap: BinaryHeap<SimEvent>,
    now_ms: f64,
    seq: u64,
}

impl Clock {
    fn new() -> Self {
        Clock {
            heap: BinaryHeap::new(),
            now_ms: 0.0,
            seq: 0,
        }
    }

    fn schedule(&mut self, at_ms: f64, action: Action) {
        self.heap.push(SimEvent {
            at: TimeKey(at_ms),
            seq: self.seq,
            action,
        });
        self.seq += 1;
    }

    fn pop(&mut self) -> Option<(f64, Action)> {
        self.heap.pop().map(|e| {
            debug_assert!(e.at.0 >= self.now_ms);
            self.now_ms = e.at.0;
            (e.at.0, e.action)
        })
    }
}

/// A queued job: which operator's work and when the event entered the
/// pipeline.
#[derive(Debug, Clone, Copy)]
struct Job {
    op: usize,
    ingress_ms: f64,
}

/// Discrete-event simulation of a placed pipeline on a virtual clock.
///
/// Service times are the cost model's per-event base times with seeded
/// exponential jitter; each node is a FIFO single server; links add latency
/// and per-event transmission time. Operator logic never runs. With a
/// controller attached, each interval boundary feeds utilization samples to
/// [`offload_step`] and applies the proposed migration after its transfer
/// delay.
#[allow(clippy::too_many_arguments)]
pub fn run_simulated(
    p: &PipelineSpec,
    c: &ClusterSpec,
    pl: &Placement,
    workload: &WorkloadSchedule,
    duration_s: f64,
    seed: u64,
    mut controller: Option<(&mut ControllerState, Objective)>,
    cost_cfg: &CostModelCfg,
) -> Result<SimOutput, RuntimeError> {
    let violations: Vec<_> = validate_pipeline(p)
        .into_iter()
        .chain(validate_cluster(c))
        .collect();
    if !violations.is_empty() {
        return Err(RuntimeError::Invalid(violations));
    }

    let order = topological_order(p).expect("validated");
    let op_ids: Vec<String> = order;
    let op_idx: BTreeMap<&str, usize> =
        op_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();
    let node_ids: Vec<String> = c.nodes.iter().map(|n| n.id.clone()).collect();
    let node_idx: BTreeMap<&str, usize> =
        node_ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect();

    // op -> current node index; changes on migration.
    let mut at_node: Vec<usize> = op_ids
        .iter()
        .map(|id| node_idx[pl.node_of(id).expect("total placement")])
        .collect();
    // Downstream edges per op: (consumer op index, est bytes).
    let downstream: Vec<Vec<(usize, f64)>> = op_ids
        .iter()
        .map(|id| {
            p.out_edges(id)
                .iter()
                .map(|e| (op_idx[e.to.as_str()], e.est_bytes_per_event))
                .collect()
        })
        .collect();
    let sources: Vec<usize> = op_ids
        .iter()
        .enumerate()
        .filter(|(_, id)| p.in_edges(id).is_empty())
        .map(|(i, _)| i)
        .collect();
    let sinks: Vec<bool> = op_ids.iter().map(|id| p.out_edges(id).is_empty()).collect();
    let base_ms: Vec<f64> = op_ids
        .iter()
        .map(|id| p.operator(id).unwrap().cpu_demand)
        .collect();

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut clock = Clock::new();
    let interval_ms = 1000.0;
    let total_intervals = duration_s.ceil() as u64;

    // Per-node FIFO server.
    let mut queues: Vec<VecDeque<Job>> = node_ids.iter().map(|_| VecDeque::new()).collect();
    let mut busy_until: Vec<Option<Job>> = node_ids.iter().map(|_| None).collect();
    let mut busy_ms: Vec<f64> = vec![0.0; node_ids.len()];
    // Migrations in flight: op -> (ready time, target node). Jobs for a
    // migrating operator queue at the target and wait for the transfer.
    let mut migrating: BTreeMap<usize, (f64, usize)> = BTreeMap::new();

    // Interval accumulators.
    let mut events_in: Vec<u64> = vec![0; op_ids.len()];
    let mut events_out: Vec<u64> = vec![0; op_ids.len()];
    let mut latencies: Vec<f64> = Vec::new();
    let mut sink_done_in_interval = 0u64;

    let mut out = SimOutput::default();
    let mut placement = pl.clone();

    for src in &sources {
        clock.schedule(0.0, Action::SourceTick { op: *src });
    }
    clock.schedule(interval_ms, Action::IntervalEnd { interval: 0 });

    let end_ms = duration_s * 1000.0;

    while let Some((now, action)) = clock.pop() {
        if now > end_ms + 1e-9 {
            break;
        }
        match action {
            Action::SourceTick { op } => {
                let interval = (now / interval_ms) as u64;
                let eps = workload.eps_at(interval);
                if eps > 0.0 {
                    clock.schedule(now, Action::Arrival { op, ingress_ms: now });
                    let gap_ms = {
                        let z: f64 = rng.sample(Exp1);
                        z * 1000.0 / eps
                    };
                    clock.schedule(now + gap_ms, Action::SourceTick { op });
                } else {
                    // Idle source: poll again next interval.
                    clock.schedule(
                        (interval + 1) as f64 * interval_ms,
                        Action::SourceTick { op },
                    );
                }
            }
            Action::Arrival { op, ingress_ms } => {
                events_in[op] += 1;
                let node = match migrating.get(&op) {
                    Some((_, to)) => *to,
                    None => at_node[op],
                };
                queues[node].push_back(Job { op, ingress_ms });
                try_start(
                    node, now, &mut clock, &mut queues, &mut busy_until, &mut busy_ms, &base_ms,
                    c, &mut rng, &migrating,
                );
            }
            Action::ServiceDone { node } => {
                if let Some(job) = busy_until[node].take() {
                    events_out[job.op] += 1;
                    if sinks[job.op] {
                        latencies.push(now - job.ingress_ms);
                        sink_done_in_interval += 1;
                    }
                    for (next_op, bytes) in &downstream[job.op] {
                        let from_node = node;
                        let to_node = at_node[*next_op];
                        let delay = if from_node == to_node {
                            0.0
                        } else {
                            let (lat, mbps) =
                                c.link(&node_ids[from_node], &node_ids[to_node]).unwrap();
                            lat + bytes / (mbps * 125.0)
                        };
                        clock.schedule(
                            now + delay,
                            Action::Arrival { op: *next_op, ingress_ms: job.ingress_ms },
                        );
                    }
                }
                try_start(
                    node, now, &mut clock, &mut queues, &mut busy_until, &mut busy_ms, &base_ms,
                    c, &mut rng, &migrating,
                );
            }
            Action::MigrationDone { op, to } => {
                migrating.remove(&op);
                at_node[op] = to;
                placement.assign(&op_ids[op], &node_ids[to]);
                // Jobs may have queued at the target during the transfer.
                try_start(
                    to, now, &mut clock, &mut queues, &mut busy_until, &mut busy_ms, &base_ms, c,
                    &mut rng, &migrating,
                );
            }
            Action::IntervalEnd { interval } => {
                // Build the frame and feed the controller.
                let mut frame = MetricsFrame {
                    interval,
                    ..Default::default()
                };
                let mut samples = Vec::new();
                for (ni, node) in node_ids.iter().enumerate() {
                    let util = busy_ms[ni] / interval_ms;
                    frame.node_util.insert(node.clone(), util);
                    samples.push(UtilizationSample {
                        node: node.clone(),
                        interval,
                        cpu_util: util,
                        queue_depth: queues[ni].len() as u64,
                        events_processed: 0,
                    });
                    busy_ms[ni] = 0.0;
                }
                for (oi, id) in op_ids.iter().enumerate() {
                    frame.per_op.insert(
                        id.clone(),
                        OpMetrics {
                            events_in: events_in[oi],
                            events_out: events_out[oi],
                            queue_depth: queues[at_node[oi]].len() as u64,
                        },
                    );
                    events_in[oi] = 0;
                    events_out[oi] = 0;
                }
                frame.p50_ms = MetricsFrame::percentile(&mut latencies, 0.5);
                frame.p95_ms = MetricsFrame::percentile(&mut latencies, 0.95);
                frame.throughput_eps = sink_done_in_interval as f64;
                latencies.clear();
                sink_done_in_interval = 0;
                out.metrics.push(frame);

                if let Some((state, obj)) = controller.as_mut() {
                    let input_eps = workload.eps_at(interval);
                    if let Some(plan) = offload_step(
                        state,
                        &samples,
                        &placement,
                        p,
                        c,
                        obj,
                        input_eps,
                        cost_cfg,
                    ) {
                        apply_plan(
                            &plan,
                            p,
                            c,
                            &placement,
                            input_eps,
                            cost_cfg,
                            &mut clock,
                            now,
                            &op_idx,
                            &node_idx,
                            &mut migrating,
                            &mut out,
                        );
                    }
                }

                if interval + 1 < total_intervals {
                    clock.schedule(now + interval_ms, Action::IntervalEnd { interval: interval + 1 });
                }
            }
        }
    }

    out.final_placement = placement;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn apply_plan(
    plan: &MigrationPlan,
    p: &PipelineSpec,
    c: &ClusterSpec,
    placement: &Placement,
    input_eps: f64,
    cost_cfg: &CostModelCfg,
    clock: &mut Clock,
    now: f64,
    op_idx: &BTreeMap<&str, usize>,
    node_idx: &BTreeMap<&str, usize>,
    migrating: &mut BTreeMap<usize, (f64, usize)>,
    out: &mut SimOutput,
) {
    let pre = estimate_cost(p, c, placement, input_eps, cost_cfg)
        .map(|e| e.p95_latency_ms)
        .unwrap_or(f64::NAN);
    let mut post_pl = placement.clone();
    post_pl.assign(&plan.operator, &plan.to);
    let post = estimate_cost(p, c, &post_pl, input_eps, cost_cfg)
        .map(|e| e.p95_latency_ms)
        .unwrap_or(f64::NAN);

    // Transfer cost: serialized state over the link, plus its latency.
    let op_spec = p.operator(&plan.operator).unwrap();
    let (lat, mbps) = c.link(&plan.from, &plan.to).unwrap_or((0.0, f64::INFINITY));
    let transfer_ms = lat + op_spec.state_size * 1_000_000.0 / (mbps * 125_000.0) * 1000.0;

    let oi = op_idx[plan.operator.as_str()];
    let to = node_idx[plan.to.as_str()];
    migrating.insert(oi, (now + transfer_ms, to));
    clock.schedule(now + transfer_ms, Action::MigrationDone { op: oi, to });
    out.decisions.push(DecisionRow {
        interval: plan.interval,
        node: plan.from.clone(),
        action: "migrate".into(),
        operator: plan.operator.clone(),
        pre_p95_ms: pre,
        post_p95_ms: post,
    });
}

/// Starts the node's server on the first startable queued job, if idle.
/// Jobs whose operator is mid-transfer stay queued until the migration
/// completes.
#[allow(clippy::too_many_arguments)]
fn try_start(
    node: usize,
    now: f64,
    clock: &mut Clock,
    queues: &mut [VecDeque<Job>],
    busy_until: &mut [Option<Job>],
    busy_ms: &mut [f64],
    base_ms: &[f64],
    c: &ClusterSpec,
    rng: &mut ChaCha12Rng,
    migrating: &BTreeMap<usize, (f64, usize)>,
) {
    if busy_until[node].is_some() {
        return;
    }
    let Some(pos) = queues[node]
        .iter()
        .position(|j| migrating.get(&j.op).is_none_or(|(ready, _)| *ready <= now))
    else {
        return;
    };
    let job = queues[node].remove(pos).unwrap();
    let capacity = c.nodes[node].cpu_capacity;
    let z: f64 = rng.sample(Exp1);
    let service = base_ms[job.op] / capacity * z;
    busy_until[node] = Some(job);
    busy_ms[node] += service;
    clock.schedule(now + service, Action::ServiceDone { node });
}
