use super::{ModelError, Violation};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Every operator the runtime can instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    /// Emits externally supplied events (file, generator, or test vector).
    Source,
    /// Decodes text wire records carried in a `raw` field.
    Parse,
    Identity,
    Impute,
    Normalize,
    WindowJoin,
    DelayedLabelJoin,
    /// Bernoulli pass-through sampling at a runtime-adjustable rate.
    Sample,
    ReservoirSample,
    HashProject,
    Summarize,
    Anomaly,
    KMeans,
    /// Hoeffding-tree classifier run test-then-train, with drift detection.
    Hoeffding,
    Split,
    Sink,
}

impl OpKind {
    /// (min, max) number of inbound edges the kind accepts.
    pub fn in_arity(self) -> (usize, usize) {
        match self {
            OpKind::Source => (0, 0),
            OpKind::WindowJoin | OpKind::DelayedLabelJoin => (2, 2),
            OpKind::Sink => (1, usize::MAX),
            _ => (1, 1),
        }
    }

    pub fn is_source(self) -> bool {
        self == OpKind::Source
    }

    pub fn is_sink(self) -> bool {
        self == OpKind::Sink
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub id: String,
    pub kind: OpKind,
    /// Operator parameters, e.g. `{"k": 1000}` for `reservoir_sample`.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, serde_json::Value>,
    /// Abstract CPU units consumed per 1000 events/s of input.
    pub cpu_demand: f64,
    /// Resident memory, MB.
    #[serde(default)]
    pub mem_demand: f64,
    /// Serialized state size, MB; charged as transfer cost on migration.
    #[serde(default)]
    pub state_size: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinned_node: Option<String>,
    /// Whether the orchestrator may move this operator. Pinned operators
    /// must be declared immovable.
    #[serde(default = "default_movable")]
    pub movable: bool,
}

fn default_movable() -> bool {
    true
}

impl OperatorSpec {
    pub fn new(id: impl Into<String>, kind: OpKind) -> Self {
        OperatorSpec {
            id: id.into(),
            kind,
            params: BTreeMap::new(),
            cpu_demand: 1.0,
            mem_demand: 0.0,
            state_size: 0.0,
            pinned_node: None,
            movable: true,
        }
    }

    pub fn with_param(mut self, name: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(name.to_string(), value.into());
        self
    }

    pub fn with_demand(mut self, cpu: f64, mem: f64) -> Self {
        self.cpu_demand = cpu;
        self.mem_demand = mem;
        self
    }

    pub fn pinned_to(mut self, node: &str) -> Self {
        self.pinned_node = Some(node.to_string());
        self.movable = false;
        self
    }

    pub fn param_f64(&self, name: &str) -> Option<f64> {
        self.params.get(name).and_then(|v| v.as_f64())
    }

    pub fn param_u64(&self, name: &str) -> Option<u64> {
        self.params.get(name).and_then(|v| v.as_u64())
    }

    pub fn param_str(&self, name: &str) -> Option<&str> {
        self.params.get(name).and_then(|v| v.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub from: String,
    pub to: String,
    /// Estimated serialized size of one event on this edge, bytes.
    #[serde(default = "default_bytes")]
    pub est_bytes_per_event: f64,
}

fn default_bytes() -> f64 {
    256.0
}

impl EdgeSpec {
    pub fn new(from: &str, to: &str) -> Self {
        EdgeSpec {
            from: from.to_string(),
            to: to.to_string(),
            est_bytes_per_event: default_bytes(),
        }
    }
}

/// Hard service-level bounds; a placement violating any of them is rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlaSpec {
    pub max_p95_latency_ms: f64,
    pub min_throughput_eps: f64,
    /// Abstract currency per hour.
    pub max_monetary_cost: f64,
}

impl Default for SlaSpec {
    fn default() -> Self {
        SlaSpec {
            max_p95_latency_ms: 1_000.0,
            min_throughput_eps: 100.0,
            max_monetary_cost: 1_000.0,
        }
    }
}

/// A pipeline: a DAG of operator specifications plus the SLA it must meet
/// and the seed that fixes all of its randomness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSpec {
    pub operators: Vec<OperatorSpec>,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub sla: SlaSpec,
    #[serde(default)]
    pub seed: u64,
    /// Schema of events entering at the sources, when known statically.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<super::Schema>,
}

impl PipelineSpec {
    pub fn operator(&self, id: &str) -> Option<&OperatorSpec> {
        self.operators.iter().find(|o| o.id == id)
    }

    pub fn in_edges(&self, id: &str) -> Vec<&EdgeSpec> {
        self.edges.iter().filter(|e| e.to == id).collect()
    }

    pub fn out_edges(&self, id: &str) -> Vec<&EdgeSpec> {
        self.edges.iter().filter(|e| e.from == id).collect()
    }

    pub fn source_ids(&self) -> Vec<&str> {
        self.operators
            .iter()
            .filter(|o| self.in_edges(&o.id).is_empty())
            .map(|o| o.id.as_str())
            .collect()
    }

    pub fn sink_ids(&self) -> Vec<&str> {
        self.operators
            .iter()
            .filter(|o| self.out_edges(&o.id).is_empty())
            .map(|o| o.id.as_str())
            .collect()
    }
}

/// Checks every `PipelineSpec` invariant; returns one violation per breach
/// and an empty list iff the pipeline is well-formed.
pub fn validate_pipeline(p: &PipelineSpec) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut ids = BTreeSet::new();
    for op in &p.operators {
        if !ids.insert(op.id.as_str()) {
            out.push(Violation::new(
                &op.id,
                "duplicate-id",
                "operator id declared twice",
            ));
        }
        if !(op.cpu_demand > 0.0) {
            out.push(Violation::new(
                &op.id,
                "nonpositive-cpu-demand",
                format!("cpu_demand must be > 0, got {}", op.cpu_demand),
            ));
        }
        if op.mem_demand < 0.0 {
            out.push(Violation::new(
                &op.id,
                "negative-mem-demand",
                format!("mem_demand must be >= 0, got {}", op.mem_demand),
            ));
        }
        if op.state_size < 0.0 {
            out.push(Violation::new(
                &op.id,
                "negative-state-size",
                format!("state_size must be >= 0, got {}", op.state_size),
            ));
        }
        if op.pinned_node.is_some() && op.movable {
            out.push(Violation::new(
                &op.id,
                "pinned-movable",
                "a pinned operator must be declared movable=false",
            ));
        }
    }

    for e in &p.edges {
        for end in [&e.from, &e.to] {
            if !ids.contains(end.as_str()) {
                out.push(Violation::new(
                    end,
                    "unknown-endpoint",
                    format!("edge {} -> {} references an undeclared operator", e.from, e.to),
                ));
            }
        }
        if e.est_bytes_per_event < 0.0 {
            out.push(Violation::new(
                format!("{}->{}", e.from, e.to),
                "negative-bytes",
                "est_bytes_per_event must be >= 0",
            ));
        }
    }

    // Arity per kind: joins take exactly two inputs, sinks fan in freely,
    // everything else is single-input. Sources take none.
    for op in &p.operators {
        let n_in = p.in_edges(&op.id).len();
        let n_out = p.out_edges(&op.id).len();
        let (lo, hi) = op.kind.in_arity();
        if n_in < lo || n_in > hi {
            out.push(Violation::new(
                &op.id,
                "bad-in-arity",
                format!("kind takes {lo}..={} inputs, has {n_in}", if hi == usize::MAX { "n".into() } else { hi.to_string() }),
            ));
        }
        if op.kind.is_sink() && n_out > 0 {
            out.push(Violation::new(&op.id, "sink-with-outputs", "sink has outbound edges"));
        }
        if !op.kind.is_sink() && n_out == 0 && !p.operators.is_empty() {
            // A non-sink with no consumers silently drops data.
            out.push(Violation::new(&op.id, "dangling-operator", "non-sink operator has no outbound edge"));
        }
    }

    if let Some(cycle) = find_cycle(p) {
        out.push(Violation::new(
            cycle.join(","),
            "cycle",
            "pipeline graph must be acyclic",
        ));
    } else {
        // Source/sink existence is only meaningful on a DAG.
        if p.operators.is_empty() || p.source_ids().is_empty() {
            out.push(Violation::new("pipeline", "no-source", "need at least one operator with no inbound edges"));
        }
        if p.operators.is_empty() || p.sink_ids().is_empty() {
            out.push(Violation::new("pipeline", "no-sink", "need at least one operator with no outbound edges"));
        }
    }

    if !(p.sla.max_p95_latency_ms > 0.0) || !(p.sla.min_throughput_eps > 0.0) || !(p.sla.max_monetary_cost > 0.0) {
        out.push(Violation::new("sla", "nonpositive-sla", "all SLA bounds must be > 0"));
    }

    if let Some(schema) = &p.schema {
        out.extend(schema.validate());
    }

    out
}

/// Returns operators of the smallest cycle found, or `None` on a DAG.
fn find_cycle(p: &PipelineSpec) -> Option<Vec<String>> {
    let ids: BTreeSet<&str> = p.operators.iter().map(|o| o.id.as_str()).collect();
    let mut state: BTreeMap<&str, u8> = BTreeMap::new(); // 0 unvisited, 1 on stack, 2 done
    let mut stack: Vec<&str> = Vec::new();

    fn dfs<'a>(
        node: &'a str,
        p: &'a PipelineSpec,
        ids: &BTreeSet<&'a str>,
        state: &mut BTreeMap<&'a str, u8>,
        stack: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        state.insert(node, 1);
        stack.push(node);
        for e in p.edges.iter().filter(|e| e.from == node) {
            let next = e.to.as_str();
            if !ids.contains(next) {
                continue;
            }
            match state.get(next).copied().unwrap_or(0) {
                0 => {
                    if let Some(c) = dfs(next, p, ids, state, stack) {
                        return Some(c);
                    }
                }
                1 => {
                    let pos = stack.iter().position(|&n| n == next).unwrap();
                    let mut cycle: Vec<String> = stack[pos..].iter().map(|s| s.to_string()).collect();
                    cycle.sort();
                    return Some(cycle);
                }
                _ => {}
            }
        }
        stack.pop();
        state.insert(node, 2);
        None
    }

    let mut starts: Vec<&str> = ids.iter().copied().collect();
    starts.sort();
    for s in starts {
        if state.get(s).copied().unwrap_or(0) == 0 {
            if let Some(c) = dfs(s, p, &ids, &mut state, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}

/// Deterministic topological order: Kahn's algorithm with ties broken by
/// ascending operator id.
pub fn topological_order(p: &PipelineSpec) -> Result<Vec<String>, ModelError> {
    let mut in_deg: BTreeMap<&str, usize> = p.operators.iter().map(|o| (o.id.as_str(), 0)).collect();
    for e in &p.edges {
        if let Some(d) = in_deg.get_mut(e.to.as_str()) {
            *d += 1;
        }
    }
    // BTreeSet pops the smallest id first.
    let mut ready: BTreeSet<&str> = in_deg
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(id, _)| *id)
        .collect();
    let mut order = Vec::with_capacity(p.operators.len());
    while let Some(&id) = ready.iter().next() {
        ready.remove(id);
        order.push(id.to_string());
        for e in p.edges.iter().filter(|e| e.from == id) {
            if let Some(d) = in_deg.get_mut(e.to.as_str()) {
                *d -= 1;
                if *d == 0 {
                    ready.insert(e.to.as_str());
                }
            }
        }
    }
    if order.len() != p.operators.len() {
        return Err(ModelError::Cyclic(
            "call validate_pipeline first".to_string(),
        ));
    }
    Ok(order)
}
