use super::cost::{estimate_cost, validate_placement, CostModelCfg, Objective};
use crate::model::{ClusterSpec, Placement, PipelineSpec, Tier};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One monitoring interval's view of one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationSample {
    pub node: String,
    pub interval: u64,
    pub cpu_util: f64,
    pub queue_depth: u64,
    pub events_processed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerCfg {
    /// Overload threshold.
    pub hi: f64,
    /// Underload threshold; must stay below `hi` (hysteresis band).
    pub lo: f64,
    /// Consecutive breaching intervals before acting.
    pub patience: u32,
    /// Intervals to hold still after emitting a plan.
    pub cooldown: u32,
}

impl Default for ControllerCfg {
    fn default() -> Self {
        ControllerCfg {
            hi: 0.85,
            lo: 0.4,
            patience: 3,
            cooldown: 5,
        }
    }
}

/// Offloading controller state: hysteresis thresholds, per-node breach
/// counters, and the cooldown clock.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerState {
    pub cfg: ControllerCfg,
    pub over_hi: BTreeMap<String, u32>,
    pub under_lo_streak: u32,
    pub cooldown_left: u32,
}

impl ControllerState {
    pub fn new(cfg: ControllerCfg) -> Self {
        assert!(cfg.lo > 0.0 && cfg.lo < cfg.hi, "need 0 < lo < hi");
        assert!(cfg.cooldown >= 1);
        ControllerState {
            cfg,
            over_hi: BTreeMap::new(),
            under_lo_streak: 0,
            cooldown_left: 0,
        }
    }
}

/// A proposed single-operator migration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MigrationPlan {
    pub operator: String,
    pub from: String,
    pub to: String,
    pub interval: u64,
}

/// One control-loop step.
///
/// Overload: a node above `hi` for `patience` consecutive intervals sheds
/// its heaviest movable operator to the feasible node minimizing scalar
/// cost. Underload: when every node sits below `lo` for `patience`
/// intervals and moving some cloud-resident movable operator onto an edge
/// node is strictly cheaper, that move is proposed. Either way a plan is
/// emitted only if the post-move placement still meets the SLA under the
/// cost model; otherwise the breach counters hold and the controller stays
/// quiet. A cooldown after each plan prevents oscillation.
#[allow(clippy::too_many_arguments)]
pub fn offload_step(
    state: &mut ControllerState,
    samples: &[UtilizationSample],
    current: &Placement,
    p: &PipelineSpec,
    c: &ClusterSpec,
    obj: &Objective,
    input_eps: f64,
    cfg: &CostModelCfg,
) -> Option<MigrationPlan> {
    let interval = samples.first().map(|s| s.interval).unwrap_or(0);

    // Update counters from this interval's samples.
    let mut all_under_lo = !samples.is_empty();
    for s in samples {
        let counter = state.over_hi.entry(s.node.clone()).or_insert(0);
        if s.cpu_util > state.cfg.hi {
            *counter += 1;
        } else {
            *counter = 0;
        }
        if s.cpu_util >= state.cfg.lo {
            all_under_lo = false;
        }
    }
    if all_under_lo {
        state.under_lo_streak += 1;
    } else {
        state.under_lo_streak = 0;
    }

    if state.cooldown_left > 0 {
        state.cooldown_left -= 1;
        return None;
    }

    let patience = state.cfg.patience;

    // Overloaded node with the highest measured utilization, ties by id.
    let overloaded = samples
        .iter()
        .filter(|s| state.over_hi.get(&s.node).copied().unwrap_or(0) >= patience)
        .max_by(|a, b| a.cpu_util.partial_cmp(&b.cpu_util).unwrap().then(b.node.cmp(&a.node)));

    if let Some(hot) = overloaded {
        let plan = shed_heaviest(hot, current, p, c, obj, input_eps, cfg, interval);
        if plan.is_some() {
            state.over_hi.insert(hot.node.clone(), 0);
            state.cooldown_left = state.cfg.cooldown;
        }
        return plan;
    }

    if state.under_lo_streak >= patience {
        let plan = consolidate_to_edge(current, p, c, obj, input_eps, cfg, interval);
        if plan.is_some() {
            state.under_lo_streak = 0;
            state.cooldown_left = state.cfg.cooldown;
        }
        return plan;
    }

    None
}

/// Heaviest movable operator on the hot node (by CPU share, ties by id) to
/// the feasible, SLA-clean node minimizing scalar cost.
#[allow(clippy::too_many_arguments)]
fn shed_heaviest(
    hot: &UtilizationSample,
    current: &Placement,
    p: &PipelineSpec,
    c: &ClusterSpec,
    obj: &Objective,
    input_eps: f64,
    cfg: &CostModelCfg,
    interval: u64,
) -> Option<MigrationPlan> {
    let (eps, _) = super::cost::eps_at_ops(p, input_eps);
    let candidate = p
        .operators
        .iter()
        .filter(|o| o.movable && current.node_of(&o.id) == Some(hot.node.as_str()))
        .max_by(|a, b| {
            let share_a = a.cpu_demand * eps[&a.id];
            let share_b = b.cpu_demand * eps[&b.id];
            share_a.partial_cmp(&share_b).unwrap().then(b.id.cmp(&a.id))
        })?;

    let mut best: Option<(f64, MigrationPlan)> = None;
    let mut nodes: Vec<&str> = c.nodes.iter().map(|n| n.id.as_str()).collect();
    nodes.sort();
    for node in nodes {
        if node == hot.node {
            continue;
        }
        let mut trial = current.clone();
        trial.assign(&candidate.id, node);
        if !validate_placement(p, c, &trial, input_eps).is_empty() {
            continue;
        }
        let Ok(est) = estimate_cost(p, c, &trial, input_eps, cfg) else { continue };
        if !est.satisfies(&p.sla) {
            continue;
        }
        let cost = obj.scalar(&est);
        if best.as_ref().is_none_or(|(b, _)| cost < *b) {
            best = Some((
                cost,
                MigrationPlan {
                    operator: candidate.id.clone(),
                    from: hot.node.clone(),
                    to: node.to_string(),
                    interval,
                },
            ));
        }
    }
    best.map(|(_, plan)| plan)
}

/// Cheapest strictly improving move of a cloud-resident movable operator
/// onto an edge node, when one exists.
fn consolidate_to_edge(
    current: &Placement,
    p: &PipelineSpec,
    c: &ClusterSpec,
    obj: &Objective,
    input_eps: f64,
    cfg: &CostModelCfg,
    interval: u64,
) -> Option<MigrationPlan> {
    let current_est = estimate_cost(p, c, current, input_eps, cfg).ok()?;
    let current_cost = obj.scalar(&current_est);

    let mut best: Option<(f64, MigrationPlan)> = None;
    for op in p.operators.iter().filter(|o| o.movable) {
        let from = current.node_of(&op.id)?;
        if c.node(from)?.tier != Tier::Cloud {
            continue;
        }
        for node in c.nodes.iter().filter(|n| n.tier == Tier::Edge) {
            let mut trial = current.clone();
            trial.assign(&op.id, &node.id);
            if !validate_placement(p, c, &trial, input_eps).is_empty() {
                continue;
            }
            let Ok(est) = estimate_cost(p, c, &trial, input_eps, cfg) else { continue };
            if !est.satisfies(&p.sla) {
                continue;
            }
            let cost = obj.scalar(&est);
            if cost < current_cost && best.as_ref().is_none_or(|(b, _)| cost < *b) {
                best = Some((
                    cost,
                    MigrationPlan {
                        operator: op.id.clone(),
                        from: from.to_string(),
                        to: node.id.clone(),
                        interval,
                    },
                ));
            }
        }
    }
    best.map(|(_, plan)| plan)
}
