use super::RuntimeError;
use crate::learn::{
    AnomalyScorer, ChangeLog, Detector, DriftLevel, HoeffdingTree, HtParams, KMeansState,
    LearnerState, ModelState, OnlineModel,
};
use crate::model::{Event, OpKind, OperatorSpec, PipelineSpec, Value};
use crate::transforms::{
    DelayedLabelJoin, ImputePolicy, Imputer, Normalizer, Reservoir, Summarizer, WindowJoin,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// What flows on an edge: events, interleaved with watermarks asserting no
/// earlier timestamps will follow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Item {
    Event(Event),
    Watermark(i64),
}

/// An operator's output in one processing step.
#[derive(Debug, Clone, PartialEq)]
pub enum Emit {
    Broadcast(Event),
    /// Split routing: deliver to the out-edge leading to this operator.
    To(String, Event),
    Watermark(i64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) enum OpState {
    Source,
    Identity,
    Parse,
    Impute(Imputer),
    Normalize(Normalizer),
    WindowJoin(WindowJoin),
    DelayedLabelJoin(DelayedLabelJoin),
    Sample {
        rate: f64,
        rng: ChaCha12Rng,
    },
    ReservoirSample {
        reservoir: Reservoir<Event>,
        rng: ChaCha12Rng,
    },
    HashProject {
        dims: usize,
        salt: u64,
    },
    Summarize(Summarizer),
    Anomaly(AnomalyScorer),
    KMeans(KMeansState),
    Hoeffding {
        tree: HoeffdingTree,
        detector: Detector,
        changelog: ChangeLog,
        reset_on_drift: bool,
        last_level: DriftLevel,
        schema_fingerprint: u64,
    },
    Split(crate::connectors::SplitRuleSet),
    Sink {
        collected: Vec<Event>,
    },
}

/// A live operator instance: serializable state plus watermark bookkeeping.
/// Both live engines drive instances through [`OpRuntime::on_item`]; state
/// moves between nodes (or threads) by serializing the whole instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpRuntime {
    pub id: String,
    pub kind: OpKind,
    state: OpState,
    in_watermarks: Vec<i64>,
    out_watermark: i64,
    pub events_in: u64,
    pub events_out: u64,
}

impl OpRuntime {
    /// Instantiates the operator named by a spec. The per-operator RNG is
    /// seeded from `(pipeline seed, operator id)` so behavior never depends
    /// on placement.
    pub fn build(spec: &OperatorSpec, p: &PipelineSpec) -> Result<Self, RuntimeError> {
        let bad = |param: &str, detail: &str| RuntimeError::BadParam {
            op: spec.id.clone(),
            param: param.to_string(),
            detail: detail.to_string(),
        };
        let op_seed = p.seed ^ fnv1a64(spec.id.as_bytes());
        let in_ports = p.in_edges(&spec.id).len().max(1);
        let state = match spec.kind {
            OpKind::Source => OpState::Source,
            OpKind::Identity => OpState::Identity,
            OpKind::Parse => OpState::Parse,
            OpKind::Impute => {
                let policy = match spec.param_str("policy").unwrap_or("mean") {
                    "mean" => ImputePolicy::Mean,
                    "last_value" => ImputePolicy::LastValue,
                    "mode" => ImputePolicy::Mode,
                    other => return Err(bad("policy", &format!("unknown policy {other:?}"))),
                };
                OpState::Impute(Imputer::new(policy))
            }
            OpKind::Normalize => OpState::Normalize(Normalizer::new()),
            OpKind::WindowJoin => {
                let delta = spec
                    .param_f64("delta_ms")
                    .ok_or_else(|| bad("delta_ms", "required"))?;
                OpState::WindowJoin(WindowJoin::new(delta as i64))
            }
            OpKind::DelayedLabelJoin => {
                let timeout = spec
                    .param_f64("timeout_ms")
                    .ok_or_else(|| bad("timeout_ms", "required"))?;
                OpState::DelayedLabelJoin(DelayedLabelJoin::new(timeout as i64))
            }
            OpKind::Sample => {
                let rate = spec.param_f64("rate").unwrap_or(1.0);
                if !(0.0..=1.0).contains(&rate) {
                    return Err(bad("rate", "must be in [0,1]"));
                }
                OpState::Sample {
                    rate,
                    rng: ChaCha12Rng::seed_from_u64(op_seed),
                }
            }
            OpKind::ReservoirSample => {
                let k = spec.param_u64("k").ok_or_else(|| bad("k", "required"))? as usize;
                if k == 0 {
                    return Err(bad("k", "must be >= 1"));
                }
                OpState::ReservoirSample {
                    reservoir: Reservoir::new(k),
                    rng: ChaCha12Rng::seed_from_u64(op_seed),
                }
            }
            OpKind::HashProject => {
                let dims = spec.param_u64("d").ok_or_else(|| bad("d", "required"))? as usize;
                if dims == 0 {
                    return Err(bad("d", "must be >= 1"));
                }
                OpState::HashProject {
                    dims,
                    salt: spec.param_u64("salt").unwrap_or(p.seed),
                }
            }
            OpKind::Summarize => {
                let window = spec
                    .param_f64("window_ms")
                    .ok_or_else(|| bad("window_ms", "required"))?;
                if window <= 0.0 {
                    return Err(bad("window_ms", "must be > 0"));
                }
                OpState::Summarize(Summarizer::new(window as i64))
            }
            OpKind::Anomaly => OpState::Anomaly(AnomalyScorer::new()),
            OpKind::KMeans => {
                let k = spec.param_u64("k").ok_or_else(|| bad("k", "required"))? as usize;
                if k == 0 {
                    return Err(bad("k", "must be >= 1"));
                }
                OpState::KMeans(KMeansState::new(k))
            }
            OpKind::Hoeffding => {
                let schema = p
                    .schema
                    .as_ref()
                    .ok_or_else(|| bad("schema", "pipeline must declare a schema with labels"))?;
                let mut params = HtParams::default();
                if let Some(v) = spec.param_f64("delta") {
                    params.delta = v;
                }
                if let Some(v) = spec.param_u64("n_min") {
                    params.n_min = v;
                }
                if let Some(v) = spec.param_f64("tau") {
                    params.tau = v;
                }
                if let Some(v) = spec.param_u64("bins") {
                    params.bins = v as usize;
                }
                let tree = HoeffdingTree::new(schema, params)
                    .map_err(|e| RuntimeError::op(&spec.id, e))?;
                let detector = match spec.param_str("detector").unwrap_or("ddm") {
                    "ddm" => Detector::Ddm(crate::learn::Ddm::default()),
                    "adwin" => Detector::Adwin(crate::learn::Adwin::new(
                        spec.param_f64("adwin_delta").unwrap_or(0.002),
                    )),
                    "none" => Detector::None,
                    other => return Err(bad("detector", &format!("unknown detector {other:?}"))),
                };
                OpState::Hoeffding {
                    tree,
                    detector,
                    changelog: ChangeLog::default(),
                    reset_on_drift: spec
                        .params
                        .get("reset_on_drift")
                        .and_then(|v| v.as_bool())
                        .unwrap_or(true),
                    last_level: DriftLevel::Stable,
                    schema_fingerprint: schema.fingerprint(),
                }
            }
            OpKind::Split => {
                let rules: crate::connectors::SplitRuleSet = serde_json::from_value(
                    spec.params
                        .get("rules")
                        .cloned()
                        .ok_or_else(|| bad("rules", "required"))?,
                )
                .map_err(|e| bad("rules", &e.to_string()))?;
                let targets: Vec<&str> = p.out_edges(&spec.id).iter().map(|e| e.to.as_str()).collect();
                if !targets.contains(&rules.default_target.as_str()) {
                    return Err(bad("rules", "default_target is not a downstream operator"));
                }
                for r in &rules.rules {
                    if !targets.contains(&r.target.as_str()) {
                        return Err(bad("rules", &format!("target {} is not downstream", r.target)));
                    }
                }
                OpState::Split(rules)
            }
            OpKind::Sink => OpState::Sink { collected: Vec::new() },
        };
        Ok(OpRuntime {
            id: spec.id.clone(),
            kind: spec.kind,
            state,
            in_watermarks: vec![i64::MIN; in_ports],
            out_watermark: i64::MIN,
            events_in: 0,
            events_out: 0,
        })
    }

    /// Pure per-event mapping, available on stateless kinds only; used for
    /// data-parallel execution.
    pub fn is_stateless_map(&self) -> bool {
        matches!(
            self.state,
            OpState::Identity | OpState::Parse | OpState::HashProject { .. }
        )
    }

    pub fn map_stateless(&self, e: Event) -> Result<Vec<Event>, RuntimeError> {
        match &self.state {
            OpState::Identity => Ok(vec![e]),
            OpState::Parse => parse_raw(&self.id, e).map(|e| vec![e]),
            OpState::HashProject { dims, salt } => {
                Ok(vec![crate::transforms::hash_project(&e, *dims, *salt)])
            }
            _ => unreachable!("map_stateless on stateful operator"),
        }
    }

    /// Feeds one item from the given input port.
    pub fn on_item(&mut self, port: usize, item: Item, out: &mut Vec<Emit>) -> Result<(), RuntimeError> {
        match item {
            Item::Event(e) => {
                self.events_in += 1;
                let before = out.len();
                self.on_event(port, e, out)?;
                self.events_out += out[before..]
                    .iter()
                    .filter(|em| !matches!(em, Emit::Watermark(_)))
                    .count() as u64;
            }
            Item::Watermark(wm) => self.on_watermark(port, wm, out)?,
        }
        Ok(())
    }

    fn on_event(&mut self, port: usize, e: Event, out: &mut Vec<Emit>) -> Result<(), RuntimeError> {
        match &mut self.state {
            OpState::Source | OpState::Identity => out.push(Emit::Broadcast(e)),
            OpState::Parse => out.push(Emit::Broadcast(parse_raw(&self.id, e)?)),
            OpState::Impute(imp) => out.push(Emit::Broadcast(imp.process(e))),
            OpState::Normalize(norm) => out.push(Emit::Broadcast(norm.process(e))),
            OpState::WindowJoin(join) => {
                let joined = if port == 0 {
                    join.push_left(e)
                } else {
                    join.push_right(e)
                }
                .map_err(|err| RuntimeError::op(&self.id, err))?;
                out.extend(joined.into_iter().map(Emit::Broadcast));
            }
            OpState::DelayedLabelJoin(join) => {
                let matched = if port == 0 {
                    join.push_instance(e)
                } else {
                    join.push_label(e)
                }
                .map_err(|err| RuntimeError::op(&self.id, err))?;
                out.extend(matched.into_iter().map(Emit::Broadcast));
            }
            OpState::Sample { rate, rng } => {
                // One draw per event keeps the stream deterministic across
                // mid-run rate changes.
                let keep = rng.random::<f64>() < *rate;
                if keep {
                    out.push(Emit::Broadcast(e));
                }
            }
            OpState::ReservoirSample { reservoir, rng } => {
                reservoir.add(e, rng);
            }
            OpState::HashProject { dims, salt } => {
                out.push(Emit::Broadcast(crate::transforms::hash_project(&e, *dims, *salt)));
            }
            OpState::Summarize(s) => s.push(e),
            OpState::Anomaly(a) => {
                let score = a.score_and_update(&e);
                let mut e = e;
                e.values.insert("anomaly_score".into(), Value::Num(score));
                out.push(Emit::Broadcast(e));
            }
            OpState::KMeans(km) => {
                let cluster = km.update(&e).map_err(|err| RuntimeError::op(&self.id, err))?;
                let mut e = e;
                e.values.insert("cluster".into(), Value::Cat(cluster.to_string()));
                out.push(Emit::Broadcast(e));
            }
            OpState::Hoeffding {
                tree,
                detector,
                changelog,
                reset_on_drift,
                last_level,
                ..
            } => {
                let (predicted, _) = tree.predict(&e);
                let mut tagged = e.clone();
                tagged
                    .values
                    .insert("prediction".into(), Value::Cat(tree.classes[predicted].clone()));
                if let Some(label) = e.label.as_deref() {
                    let truth = tree
                        .class_index(label)
                        .map_err(|err| RuntimeError::op(&self.id, err))?;
                    let correct = predicted == truth;
                    let level = detector.update(correct);
                    if level != *last_level {
                        changelog.push(
                            e.ts,
                            detector_name(detector),
                            &format!("{last_level}->{level}"),
                            detector.statistic(),
                        );
                        *last_level = level;
                    }
                    tree.learn_one(&e).map_err(|err| RuntimeError::op(&self.id, err))?;
                    if level == DriftLevel::Drift && *reset_on_drift {
                        tree.reset();
                    }
                }
                out.push(Emit::Broadcast(tagged));
            }
            OpState::Split(rules) => {
                let target = crate::connectors::split(&e, rules).to_string();
                out.push(Emit::To(target, e));
            }
            OpState::Sink { collected } => collected.push(e),
        }
        Ok(())
    }

    fn on_watermark(&mut self, port: usize, wm: i64, out: &mut Vec<Emit>) -> Result<(), RuntimeError> {
        if port < self.in_watermarks.len() {
            self.in_watermarks[port] = self.in_watermarks[port].max(wm);
        }
        let combined = self.in_watermarks.iter().copied().min().unwrap_or(wm);
        if combined <= self.out_watermark {
            return Ok(());
        }
        self.out_watermark = combined;

        match &mut self.state {
            OpState::WindowJoin(join) => {
                join.advance_left_watermark(combined);
                join.advance_right_watermark(combined);
            }
            OpState::DelayedLabelJoin(join) => {
                let output = join.advance_watermark(combined);
                let n = (output.labeled.len() + output.expired.len()) as u64;
                self.events_out += n;
                out.extend(output.labeled.into_iter().map(Emit::Broadcast));
                // Expired instances leave unlabeled on the same stream,
                // distinguishable by the absent label.
                out.extend(output.expired.into_iter().map(Emit::Broadcast));
            }
            OpState::Summarize(s) => {
                let summaries = s.advance_watermark(combined);
                self.events_out += summaries.len() as u64;
                out.extend(summaries.into_iter().map(Emit::Broadcast));
            }
            OpState::ReservoirSample { reservoir, .. } => {
                // The sample is released when the stream drains.
                if combined == i64::MAX {
                    let items = std::mem::take(&mut reservoir.items);
                    self.events_out += items.len() as u64;
                    out.extend(items.into_iter().map(Emit::Broadcast));
                }
            }
            _ => {}
        }
        out.push(Emit::Watermark(combined));
        Ok(())
    }

    /// Serializable model state for learner operators, if this is one.
    pub fn model_state(&self) -> Option<ModelState> {
        match &self.state {
            OpState::Hoeffding {
                tree,
                changelog,
                schema_fingerprint,
                ..
            } => Some(ModelState::new(
                *schema_fingerprint,
                LearnerState::Hoeffding(tree.clone()),
                changelog.clone(),
            )),
            OpState::KMeans(km) => Some(ModelState::new(
                0,
                LearnerState::KMeans(km.clone()),
                ChangeLog::default(),
            )),
            OpState::Anomaly(a) => Some(ModelState::new(
                0,
                LearnerState::Anomaly(a.clone()),
                ChangeLog::default(),
            )),
            _ => None,
        }
    }

    /// `set_sample_rate` control: retargets the sampling probability or the
    /// reservoir capacity.
    pub fn set_sample_rate(&mut self, rate: f64) -> Result<(), RuntimeError> {
        match &mut self.state {
            OpState::Sample { rate: r, .. } => {
                if !(0.0..=1.0).contains(&rate) {
                    return Err(RuntimeError::BadParam {
                        op: self.id.clone(),
                        param: "rate".into(),
                        detail: "must be in [0,1]".into(),
                    });
                }
                *r = rate;
                Ok(())
            }
            OpState::ReservoirSample { reservoir, .. } => {
                let k = rate as usize;
                if k == 0 {
                    return Err(RuntimeError::BadParam {
                        op: self.id.clone(),
                        param: "rate".into(),
                        detail: "reservoir capacity must be >= 1".into(),
                    });
                }
                reservoir.resize(k);
                Ok(())
            }
            _ => Err(RuntimeError::BadParam {
                op: self.id.clone(),
                param: "set_sample_rate".into(),
                detail: "operator is not a sampler".into(),
            }),
        }
    }

    /// Serialize-reinstantiate round trip, exactly what a migration does to
    /// the state. Lossless: the clone continues the stream bit-for-bit.
    pub fn migrate_state(&self) -> Result<OpRuntime, RuntimeError> {
        let json = serde_json::to_value(self).map_err(|e| RuntimeError::op(&self.id, e))?;
        serde_json::from_value(json).map_err(|e| RuntimeError::op(&self.id, e))
    }

    /// Drains collected events out of a sink.
    pub fn take_sink(&mut self) -> Vec<Event> {
        match &mut self.state {
            OpState::Sink { collected } => std::mem::take(collected),
            _ => Vec::new(),
        }
    }

    pub fn queue_hint(&self) -> u64 {
        match &self.state {
            OpState::WindowJoin(j) => j.buffered() as u64,
            OpState::DelayedLabelJoin(j) => j.pending_len() as u64,
            OpState::Summarize(s) => s.open_windows() as u64,
            _ => 0,
        }
    }
}

fn detector_name(d: &Detector) -> &'static str {
    match d {
        Detector::Ddm(_) => "ddm",
        Detector::Adwin(_) => "adwin",
        Detector::None => "none",
    }
}

/// Decodes the text wire record carried in a `raw` field.
fn parse_raw(op: &str, e: Event) -> Result<Event, RuntimeError> {
    let Some(Value::Cat(line)) = e.values.get("raw") else {
        return Err(RuntimeError::BadParam {
            op: op.to_string(),
            param: "raw".into(),
            detail: "parse expects a categorical `raw` field".into(),
        });
    };
    crate::connectors::decode_event(line.as_bytes()).map_err(|err| RuntimeError::op(op, err))
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
