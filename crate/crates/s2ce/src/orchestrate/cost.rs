use super::OrchestrateError;
use crate::model::{topological_order, ClusterSpec, Placement, PipelineSpec, SlaSpec, Tier, Violation};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Tunable constants of the analytic performance model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostModelCfg {
    /// Fixed p95-over-mean inflation applied to the critical path.
    pub p95_inflation: f64,
}

impl Default for CostModelCfg {
    fn default() -> Self {
        CostModelCfg { p95_inflation: 1.2 }
    }
}

/// What a placement costs at a given input rate: latency, throughput,
/// energy, money, and per-node CPU utilization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub p95_latency_ms: f64,
    pub throughput_eps: f64,
    pub energy_per_hour: f64,
    pub money_per_hour: f64,
    pub node_util: BTreeMap<String, f64>,
    /// Some node is saturated (util >= 1); latency is reported infinite.
    pub infeasible_utilization: bool,
}

impl CostEstimate {
    pub fn satisfies(&self, sla: &SlaSpec) -> bool {
        !self.infeasible_utilization
            && self.p95_latency_ms <= sla.max_p95_latency_ms
            && self.throughput_eps >= sla.min_throughput_eps
            && self.money_per_hour <= sla.max_monetary_cost
    }
}

/// Weighted scalarization of the three soft objectives. SLA feasibility is
/// a hard constraint handled separately, never a weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub w_lat: f64,
    pub w_energy: f64,
    pub w_money: f64,
}

impl Default for Objective {
    fn default() -> Self {
        Objective {
            w_lat: 1.0,
            w_energy: 0.1,
            w_money: 1.0,
        }
    }
}

impl Objective {
    pub fn scalar(&self, est: &CostEstimate) -> f64 {
        self.w_lat * est.p95_latency_ms
            + self.w_energy * est.energy_per_hour
            + self.w_money * est.money_per_hour
    }
}

/// Events/second entering (`.0`) and leaving (`.1`) each operator: sources
/// ingest `input_eps`, other operators sum their upstream outputs, and an
/// operator's output is its input scaled by the optional `selectivity`
/// parameter (default 1).
pub fn eps_at_ops(
    p: &PipelineSpec,
    input_eps: f64,
) -> (BTreeMap<String, f64>, BTreeMap<String, f64>) {
    let order = topological_order(p).expect("validated pipeline");
    let mut input: BTreeMap<String, f64> = BTreeMap::new();
    let mut output: BTreeMap<String, f64> = BTreeMap::new();
    for id in &order {
        let op = p.operator(id).unwrap();
        let in_eps = if p.in_edges(id).is_empty() {
            input_eps
        } else {
            p.in_edges(id)
                .iter()
                .map(|e| output.get(&e.from).copied().unwrap_or(0.0))
                .sum()
        };
        let selectivity = op.param_f64("selectivity").unwrap_or(1.0);
        input.insert(id.clone(), in_eps);
        output.insert(id.clone(), in_eps * selectivity);
    }
    (input, output)
}

/// Analytic cost model, pure and deterministic.
///
/// Per operator: utilization share `cpu_demand/1000 * eps / cpu_capacity`;
/// service latency `base_ms / (1 - node_util)` (M/M/1 inflation, infinite at
/// saturation) with `base_ms = cpu_demand / cpu_capacity`. An edge crossing
/// nodes adds the link latency plus the transmission backlog per millisecond
/// `est_bytes * eps_ms / bytes_per_ms`. p95 is the worst source-to-sink path
/// scaled by the configured inflation factor.
pub fn estimate_cost(
    p: &PipelineSpec,
    c: &ClusterSpec,
    pl: &Placement,
    input_eps: f64,
    cfg: &CostModelCfg,
) -> Result<CostEstimate, OrchestrateError> {
    check_total_and_pinned(p, pl)?;
    let (eps, eps_out) = eps_at_ops(p, input_eps);

    // Node CPU use in abstract units and utilization.
    let mut cpu_units: BTreeMap<String, f64> = BTreeMap::new();
    for op in &p.operators {
        let node = pl.node_of(&op.id).unwrap();
        *cpu_units.entry(node.to_string()).or_insert(0.0) +=
            op.cpu_demand / 1000.0 * eps[&op.id];
    }
    let mut node_util = BTreeMap::new();
    let mut infeasible = false;
    for n in &c.nodes {
        let used = cpu_units.get(&n.id).copied().unwrap_or(0.0);
        let util = used / n.cpu_capacity;
        if util >= 1.0 {
            infeasible = true;
        }
        node_util.insert(n.id.clone(), util);
    }

    // Per-operator latency under M/M/1 inflation at its node.
    let mut op_latency: BTreeMap<String, f64> = BTreeMap::new();
    for op in &p.operators {
        let node = c.node(pl.node_of(&op.id).unwrap()).unwrap();
        let util = node_util[&node.id];
        let base_ms = op.cpu_demand / node.cpu_capacity;
        let lat = if util < 1.0 {
            base_ms / (1.0 - util)
        } else {
            f64::INFINITY
        };
        op_latency.insert(op.id.clone(), lat);
    }

    // Edge cost when endpoints sit on different nodes: one-way latency plus
    // the transmission backlog per ms the edge's event rate generates.
    let edge_ms = |from: &str, to: &str, bytes: f64| -> f64 {
        let (na, nb) = (pl.node_of(from).unwrap(), pl.node_of(to).unwrap());
        if na == nb {
            return 0.0;
        }
        let (latency, bandwidth_mbps) = c.link(na, nb).expect("validated cluster is connected");
        let bytes_per_ms = bandwidth_mbps * 125.0;
        let eps_ms = eps_out[from] / 1000.0;
        latency + bytes * eps_ms / bytes_per_ms
    };

    // Longest source-to-sink path, DP over the topological order.
    let order = topological_order(p).expect("validated pipeline");
    let mut path: BTreeMap<String, f64> = BTreeMap::new();
    for id in &order {
        let own = op_latency[id];
        let best_in = p
            .in_edges(id)
            .iter()
            .map(|e| path[&e.from] + edge_ms(&e.from, id, e.est_bytes_per_event))
            .fold(0.0, f64::max);
        path.insert(id.clone(), best_in + own);
    }
    let worst_path = p
        .sink_ids()
        .iter()
        .map(|s| path[*s])
        .fold(0.0, f64::max);

    // Bottleneck throughput: saturation scales admission down.
    let worst_util = node_util.values().fold(0.0f64, |a, b| a.max(*b));
    let throughput = if worst_util <= 1.0 {
        input_eps
    } else {
        input_eps / worst_util
    };

    let mut energy = 0.0;
    let mut money = 0.0;
    for n in &c.nodes {
        let used = cpu_units.get(&n.id).copied().unwrap_or(0.0);
        energy += used * n.power_coeff;
        if n.tier == Tier::Cloud {
            money += used * n.cost_per_cpu_hour;
        }
    }

    Ok(CostEstimate {
        p95_latency_ms: cfg.p95_inflation * worst_path,
        throughput_eps: throughput,
        energy_per_hour: energy,
        money_per_hour: money,
        node_util,
        infeasible_utilization: infeasible,
    })
}

fn check_total_and_pinned(p: &PipelineSpec, pl: &Placement) -> Result<(), OrchestrateError> {
    for op in &p.operators {
        let Some(node) = pl.node_of(&op.id) else {
            return Err(OrchestrateError::PlacementInvalid(format!(
                "operator {} unassigned",
                op.id
            )));
        };
        if let Some(pin) = &op.pinned_node {
            if node != pin {
                return Err(OrchestrateError::PlacementInvalid(format!(
                    "operator {} pinned to {pin} but placed on {node}",
                    op.id
                )));
            }
        }
    }
    Ok(())
}

/// Independent feasibility check used by tests and by every placement
/// algorithm's postcondition: totality, pins, memory capacity, and CPU
/// utilization strictly below 1.
pub fn validate_placement(
    p: &PipelineSpec,
    c: &ClusterSpec,
    pl: &Placement,
    input_eps: f64,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for op in &p.operators {
        match pl.node_of(&op.id) {
            None => out.push(Violation::new(&op.id, "unassigned", "operator has no node")),
            Some(node) => {
                if c.node(node).is_none() {
                    out.push(Violation::new(&op.id, "unknown-node", node));
                }
                if let Some(pin) = &op.pinned_node {
                    if node != pin {
                        out.push(Violation::new(&op.id, "pin-broken", format!("on {node}, pinned {pin}")));
                    }
                }
            }
        }
    }
    for extra in pl.assignment.keys() {
        if p.operator(extra).is_none() {
            out.push(Violation::new(extra, "unknown-operator", "assignment names no pipeline operator"));
        }
    }
    if !out.is_empty() {
        return out;
    }

    let (eps, _) = eps_at_ops(p, input_eps);
    for n in &c.nodes {
        let mem: f64 = p
            .operators
            .iter()
            .filter(|o| pl.node_of(&o.id) == Some(n.id.as_str()))
            .map(|o| o.mem_demand)
            .sum();
        if mem > n.mem_capacity {
            out.push(Violation::new(
                &n.id,
                "mem-overflow",
                format!("{mem} MB > {} MB", n.mem_capacity),
            ));
        }
        let cpu: f64 = p
            .operators
            .iter()
            .filter(|o| pl.node_of(&o.id) == Some(n.id.as_str()))
            .map(|o| o.cpu_demand / 1000.0 * eps[&o.id])
            .sum();
        if cpu / n.cpu_capacity >= 1.0 {
            out.push(Violation::new(
                &n.id,
                "cpu-saturated",
                format!("utilization {:.3}", cpu / n.cpu_capacity),
            ));
        }
    }
    out
}
