use super::cost::{estimate_cost, validate_placement, CostEstimate, CostModelCfg, Objective};
use super::OrchestrateError;
use crate::model::{topological_order, ClusterSpec, Placement, PipelineSpec};

/// Candidate nodes for an operator: its pin alone if pinned, else every
/// node, id-sorted.
fn candidates<'a>(
    p: &'a PipelineSpec,
    c: &'a ClusterSpec,
    op_id: &str,
) -> Vec<&'a str> {
    let op = p.operator(op_id).unwrap();
    match &op.pinned_node {
        Some(pin) => vec![pin.as_str()],
        None => {
            let mut ids: Vec<&str> = c.nodes.iter().map(|n| n.id.as_str()).collect();
            ids.sort();
            ids
        }
    }
}

/// Feasible and SLA-clean under the analytic model.
fn feasible(
    p: &PipelineSpec,
    c: &ClusterSpec,
    pl: &Placement,
    input_eps: f64,
    cfg: &CostModelCfg,
) -> Option<CostEstimate> {
    if !validate_placement(p, c, pl, input_eps).is_empty() {
        return None;
    }
    let est = estimate_cost(p, c, pl, input_eps, cfg).ok()?;
    if est.satisfies(&p.sla) {
        Some(est)
    } else {
        None
    }
}

/// Induced sub-pipeline over a prefix of the topological order, so partial
/// placements can be priced while upstream rates stay exact.
fn prefix_pipeline(p: &PipelineSpec, ids: &[String]) -> PipelineSpec {
    let set: std::collections::BTreeSet<&str> = ids.iter().map(String::as_str).collect();
    PipelineSpec {
        operators: p
            .operators
            .iter()
            .filter(|o| set.contains(o.id.as_str()))
            .cloned()
            .collect(),
        edges: p
            .edges
            .iter()
            .filter(|e| set.contains(e.from.as_str()) && set.contains(e.to.as_str()))
            .cloned()
            .collect(),
        sla: p.sla.clone(),
        seed: p.seed,
        schema: None,
    }
}

/// Greedy construction: operators in topological order, each assigned to
/// the feasible node that minimizes the scalar cost of the partial
/// placement. Ties break by node id.
pub fn place_greedy(
    p: &PipelineSpec,
    c: &ClusterSpec,
    obj: &Objective,
    input_eps: f64,
    cfg: &CostModelCfg,
) -> Result<Placement, OrchestrateError> {
    let order = topological_order(p).map_err(|e| OrchestrateError::PlacementInvalid(e.to_string()))?;
    let mut pl = Placement::default();
    for (i, op_id) in order.iter().enumerate() {
        let prefix = prefix_pipeline(p, &order[..=i]);
        let mut best: Option<(f64, &str)> = None;
        for node in candidates(p, c, op_id) {
            let mut trial = pl.clone();
            trial.assign(op_id, node);
            // Capacity on the partial placement; SLA on its estimate. The
            // partial p95 only grows as the suffix is added, so pruning on
            // it never discards a completable assignment that a full check
            // would keep.
            if !validate_placement(&prefix, c, &trial, input_eps).is_empty() {
                continue;
            }
            let Ok(est) = estimate_cost(&prefix, c, &trial, input_eps, cfg) else {
                continue;
            };
            if !est.satisfies(&p.sla) {
                continue;
            }
            let cost = obj.scalar(&est);
            if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                best = Some((cost, node));
            }
        }
        match best {
            Some((_, node)) => pl.assign(op_id, node),
            None => return Err(OrchestrateError::PlacementInfeasible(op_id.clone())),
        }
    }
    Ok(pl)
}

/// Hill climbing over single-operator moves and pairwise swaps of movable
/// operators. Accepts only strictly improving, feasible neighbors; stops at
/// a local optimum or after `max_iters` accepted moves.
pub fn place_local_search(
    p: &PipelineSpec,
    c: &ClusterSpec,
    obj: &Objective,
    start: Placement,
    input_eps: f64,
    cfg: &CostModelCfg,
    max_iters: usize,
) -> Placement {
    let Some(start_est) = feasible(p, c, &start, input_eps, cfg) else {
        return start;
    };
    let mut current = start;
    let mut current_cost = obj.scalar(&start_est);

    let movable: Vec<&str> = p
        .operators
        .iter()
        .filter(|o| o.movable)
        .map(|o| o.id.as_str())
        .collect();
    let mut nodes: Vec<&str> = c.nodes.iter().map(|n| n.id.as_str()).collect();
    nodes.sort();

    for _ in 0..max_iters {
        let mut best: Option<(f64, Placement)> = None;

        // Single moves.
        for op in &movable {
            for node in &nodes {
                if current.node_of(op) == Some(*node) {
                    continue;
                }
                let mut trial = current.clone();
                trial.assign(op, node);
                if let Some(est) = feasible(p, c, &trial, input_eps, cfg) {
                    let cost = obj.scalar(&est);
                    if cost < current_cost && best.as_ref().is_none_or(|(b, _)| cost < *b) {
                        best = Some((cost, trial));
                    }
                }
            }
        }
        // Pairwise swaps.
        for (i, a) in movable.iter().enumerate() {
            for b in &movable[i + 1..] {
                let (na, nb) = (current.node_of(a).unwrap(), current.node_of(b).unwrap());
                if na == nb {
                    continue;
                }
                let (na, nb) = (na.to_string(), nb.to_string());
                let mut trial = current.clone();
                trial.assign(a, &nb);
                trial.assign(b, &na);
                if let Some(est) = feasible(p, c, &trial, input_eps, cfg) {
                    let cost = obj.scalar(&est);
                    if cost < current_cost && best.as_ref().is_none_or(|(bc, _)| cost < *bc) {
                        best = Some((cost, trial));
                    }
                }
            }
        }

        match best {
            Some((cost, pl)) => {
                current_cost = cost;
                current = pl;
            }
            None => break,
        }
    }
    current
}

/// Exact optimum by enumeration, usable as an oracle on small instances
/// only (the NP-hard problem grows as `nodes^ops`). Ties break by the
/// lexicographically smallest assignment vector in operator-id order.
pub fn place_exhaustive(
    p: &PipelineSpec,
    c: &ClusterSpec,
    obj: &Objective,
    input_eps: f64,
    cfg: &CostModelCfg,
) -> Result<Placement, OrchestrateError> {
    if p.operators.len() > 8 || c.nodes.len() > 4 {
        return Err(OrchestrateError::TooLarge(format!(
            "{} operators x {} nodes",
            p.operators.len(),
            c.nodes.len()
        )));
    }
    let mut op_ids: Vec<&str> = p.operators.iter().map(|o| o.id.as_str()).collect();
    op_ids.sort();
    let mut nodes: Vec<&str> = c.nodes.iter().map(|n| n.id.as_str()).collect();
    nodes.sort();

    let mut best: Option<(f64, Placement)> = None;
    let mut assignment = vec![0usize; op_ids.len()];
    loop {
        let mut pl = Placement::default();
        for (op, node_idx) in op_ids.iter().zip(&assignment) {
            pl.assign(op, nodes[*node_idx]);
        }
        let pin_ok = p.operators.iter().all(|o| {
            o.pinned_node
                .as_deref()
                .map(|pin| pl.node_of(&o.id) == Some(pin))
                .unwrap_or(true)
        });
        if pin_ok {
            if let Some(est) = feasible(p, c, &pl, input_eps, cfg) {
                let cost = obj.scalar(&est);
                // Strict improvement keeps the first (lexicographically
                // smallest) assignment among equal-cost optima.
                if best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    best = Some((cost, pl));
                }
            }
        }
        // Next assignment vector, last index fastest.
        let mut i = assignment.len();
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            assignment[i] += 1;
            if assignment[i] < nodes.len() {
                break;
            }
            assignment[i] = 0;
        }
        if assignment.iter().all(|&x| x == 0) {
            break;
        }
    }
    best.map(|(_, pl)| pl)
        .ok_or_else(|| OrchestrateError::PlacementInfeasible("<any>".into()))
}
