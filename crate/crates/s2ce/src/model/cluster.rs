use super::Violation;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    Cloud,
    Edge,
}

/// A compute node. Edge nodes are owned hardware (zero monetary cost,
/// nonzero power draw); cloud nodes bill per CPU-hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: String,
    pub tier: Tier,
    /// Abstract CPU units: one unit processes 1000 events/s of a demand-1
    /// operator.
    pub cpu_capacity: f64,
    /// MB.
    pub mem_capacity: f64,
    /// Energy units per CPU-unit-hour.
    #[serde(default)]
    pub power_coeff: f64,
    /// Currency per CPU-unit-hour; must be 0 on edge nodes.
    #[serde(default)]
    pub cost_per_cpu_hour: f64,
}

impl NodeSpec {
    pub fn cloud(id: &str, cpu: f64, mem: f64, cost: f64) -> Self {
        NodeSpec {
            id: id.to_string(),
            tier: Tier::Cloud,
            cpu_capacity: cpu,
            mem_capacity: mem,
            power_coeff: 0.2,
            cost_per_cpu_hour: cost,
        }
    }

    pub fn edge(id: &str, cpu: f64, mem: f64, power: f64) -> Self {
        NodeSpec {
            id: id.to_string(),
            tier: Tier::Edge,
            cpu_capacity: cpu,
            mem_capacity: mem,
            power_coeff: power,
            cost_per_cpu_hour: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub from: String,
    pub to: String,
    /// One-way, ms.
    pub latency_ms: f64,
    pub bandwidth_mbps: f64,
}

impl LinkSpec {
    pub fn new(from: &str, to: &str, latency_ms: f64, bandwidth_mbps: f64) -> Self {
        LinkSpec {
            from: from.to_string(),
            to: to.to_string(),
            latency_ms,
            bandwidth_mbps,
        }
    }
}

/// Cloud/edge nodes plus the links between them. Links are symmetric: one
/// declaration per unordered pair covers both directions, and every node has
/// an implicit self-link with zero latency and unbounded bandwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpec {
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
}

impl ClusterSpec {
    pub fn node(&self, id: &str) -> Option<&NodeSpec> {
        self.nodes.iter().find(|n| n.id == id)
    }

    /// (latency_ms, bandwidth_mbps) between two nodes, the self-link
    /// included. `None` when the pair is not connected (invalid clusters
    /// only).
    pub fn link(&self, a: &str, b: &str) -> Option<(f64, f64)> {
        if a == b {
            return Some((0.0, f64::INFINITY));
        }
        self.links
            .iter()
            .find(|l| (l.from == a && l.to == b) || (l.from == b && l.to == a))
            .map(|l| (l.latency_ms, l.bandwidth_mbps))
    }
}

/// Checks every `ClusterSpec` invariant, including pairwise connectivity.
pub fn validate_cluster(c: &ClusterSpec) -> Vec<Violation> {
    let mut out = Vec::new();

    let mut ids = BTreeSet::new();
    for n in &c.nodes {
        if !ids.insert(n.id.as_str()) {
            out.push(Violation::new(&n.id, "duplicate-id", "node id declared twice"));
        }
        if !(n.cpu_capacity > 0.0) || !(n.mem_capacity > 0.0) {
            out.push(Violation::new(
                &n.id,
                "nonpositive-capacity",
                "cpu_capacity and mem_capacity must be > 0",
            ));
        }
        if n.tier == Tier::Edge && n.cost_per_cpu_hour != 0.0 {
            out.push(Violation::new(
                &n.id,
                "edge-with-cost",
                "edge nodes are owned hardware: cost_per_cpu_hour must be 0",
            ));
        }
        if n.power_coeff < 0.0 || n.cost_per_cpu_hour < 0.0 {
            out.push(Violation::new(&n.id, "negative-coefficient", "power/cost must be >= 0"));
        }
    }

    let mut seen_pairs = BTreeSet::new();
    for l in &c.links {
        for end in [&l.from, &l.to] {
            if !ids.contains(end.as_str()) {
                out.push(Violation::new(
                    end,
                    "unknown-endpoint",
                    format!("link {} -- {} references an undeclared node", l.from, l.to),
                ));
            }
        }
        if l.from == l.to {
            out.push(Violation::new(&l.from, "explicit-self-link", "self-links are implicit"));
        }
        if l.latency_ms < 0.0 {
            out.push(Violation::new(
                format!("{}--{}", l.from, l.to),
                "negative-latency",
                "latency_ms must be >= 0",
            ));
        }
        if !(l.bandwidth_mbps > 0.0) {
            out.push(Violation::new(
                format!("{}--{}", l.from, l.to),
                "nonpositive-bandwidth",
                "bandwidth_mbps must be > 0",
            ));
        }
        let pair = if l.from <= l.to {
            (l.from.clone(), l.to.clone())
        } else {
            (l.to.clone(), l.from.clone())
        };
        if !seen_pairs.insert(pair.clone()) {
            out.push(Violation::new(
                format!("{}--{}", pair.0, pair.1),
                "duplicate-link",
                "node pair linked twice",
            ));
        }
    }

    // Complete connectivity over unordered pairs, self-links implicit.
    let sorted: Vec<&str> = ids.iter().copied().collect();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            if c.link(a, b).is_none() {
                out.push(Violation::new(
                    format!("{a}--{b}"),
                    "unconnected-pair",
                    "every node pair needs a link",
                ));
            }
        }
    }

    out
}

/// A total assignment of pipeline operators to cluster nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Placement {
    pub assignment: BTreeMap<String, String>,
}

impl Placement {
    pub fn node_of(&self, op: &str) -> Option<&str> {
        self.assignment.get(op).map(|s| s.as_str())
    }

    pub fn assign(&mut self, op: &str, node: &str) {
        self.assignment.insert(op.to_string(), node.to_string());
    }

    /// Operators placed on `node`, id-sorted.
    pub fn ops_on<'a>(&'a self, node: &str) -> Vec<&'a str> {
        self.assignment
            .iter()
            .filter(|(_, n)| n.as_str() == node)
            .map(|(o, _)| o.as_str())
            .collect()
    }
}
