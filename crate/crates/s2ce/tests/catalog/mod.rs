//! Shared fixtures for the acceptance suite: the pipeline catalog, the
//! 3-node cluster, placement enumeration, the controller scenario and its
//! rule-replay oracle.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use s2ce::connectors::{SplitPredicate, SplitRule, SplitRuleSet};
use s2ce::generate::{build_generator, ConceptSpec, GenKind, GeneratorSpec};
use s2ce::model::{
    ClusterSpec, EdgeSpec, Event, LinkSpec, NodeSpec, OpKind, OperatorSpec, Placement,
    PipelineSpec, SlaSpec, Value,
};
use s2ce::orchestrate::{validate_placement, CostModelCfg, Objective};
use s2ce::runtime::{run_simulated, InputsMap, SimOutput, WorkloadSchedule};

pub struct Case {
    pub name: &'static str,
    pub pipeline: PipelineSpec,
    pub inputs: InputsMap,
    pub input_eps: f64,
}

/// One cloud node and two edge nodes, fully linked.
pub fn accept_cluster() -> ClusterSpec {
    ClusterSpec {
        nodes: vec![
            NodeSpec::cloud("cloud1", 8.0, 8192.0, 0.5),
            NodeSpec::edge("edge1", 2.0, 2048.0, 1.0),
            NodeSpec::edge("edge2", 1.0, 1024.0, 0.8),
        ],
        links: vec![
            LinkSpec::new("cloud1", "edge1", 5.0, 80.0),
            LinkSpec::new("cloud1", "edge2", 8.0, 40.0),
            LinkSpec::new("edge1", "edge2", 2.0, 100.0),
        ],
    }
}

fn op(id: &str, kind: OpKind) -> OperatorSpec {
    let mut spec = OperatorSpec::new(id, kind);
    spec.cpu_demand = 0.3;
    spec
}

fn pipeline(ops: Vec<OperatorSpec>, edges: Vec<(&str, &str)>, seed: u64) -> PipelineSpec {
    PipelineSpec {
        operators: ops,
        edges: edges.iter().map(|(a, b)| EdgeSpec::new(a, b)).collect(),
        sla: SlaSpec {
            max_p95_latency_ms: 10_000.0,
            min_throughput_eps: 1.0,
            max_monetary_cost: 1_000.0,
        },
        seed,
        schema: None,
    }
}

fn labeled_stream(seed: u64, n: usize) -> (Vec<Event>, s2ce::model::Schema) {
    let mut spec = GeneratorSpec::new(GenKind::Hyperplane, 3, seed);
    spec.noise_prob = 0.1;
    let generator = build_generator(&spec).unwrap();
    let schema = generator.schema();
    (generator.take(n).collect(), schema)
}

fn plain_stream(seed: u64, n: usize) -> Vec<Event> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    (0..n as i64)
        .map(|i| {
            let mut e = Event::new(i * 3, format!("k{}", rng.random_range(0..5)))
                .with("a", rng.random_range(-5.0..5.0))
                .with("b", rng.random_range(0.0..1.0))
                .with_source("plain");
            if rng.random_bool(0.1) {
                e.values.insert("a".into(), Value::Missing);
            }
            e
        })
        .collect()
}

/// Ten pipelines covering every operator family the runtime supports.
pub fn pipeline_catalog() -> Vec<Case> {
    let mut cases = Vec::new();

    // 1: plain transform chain.
    let mut p = pipeline(
        vec![op("src", OpKind::Source), op("norm", OpKind::Normalize), op("out", OpKind::Sink)],
        vec![("src", "norm"), ("norm", "out")],
        11,
    );
    p.operators[1].cpu_demand = 0.5;
    let mut inputs = InputsMap::new();
    inputs.insert("src".into(), plain_stream(11, 400));
    cases.push(Case { name: "normalize-chain", pipeline: p, inputs, input_eps: 100.0 });

    // 2: imputation ahead of normalization.
    let p = pipeline(
        vec![
            op("src", OpKind::Source),
            op("fill", OpKind::Impute).with_param("policy", "mean"),
            op("norm", OpKind::Normalize),
            op("out", OpKind::Sink),
        ],
        vec![("src", "fill"), ("fill", "norm"), ("norm", "out")],
        12,
    );
    let mut inputs = InputsMap::new();
    inputs.insert("src".into(), plain_stream(12, 400));
    cases.push(Case { name: "impute-normalize", pipeline: p, inputs, input_eps: 100.0 });

    // 3: sampled learning.
    let (stream, schema) = labeled_stream(13, 500);
    let mut p = pipeline(
        vec![
            op("src", OpKind::Source),
            op("thin", OpKind::Sample).with_param("rate", 0.7),
            op("learn", OpKind::Hoeffding).with_param("detector", "ddm"),
            op("out", OpKind::Sink),
        ],
        vec![("src", "thin"), ("thin", "learn"), ("learn", "out")],
        13,
    );
    p.schema = Some(schema);
    let mut inputs = InputsMap::new();
    inputs.insert("src".into(), stream);
    cases.push(Case { name: "sample-learn", pipeline: p, inputs, input_eps: 100.0 });

    // 4: hashing into clustering.
    let p = pipeline(
        vec![
            op("src", OpKind::Source),
            op("proj", OpKind::HashProject).with_param("d", 6),
            op("cluster", OpKind::KMeans).with_param("k", 3),
            op("out", OpKind::Sink),
        ],
        vec![("src", "proj"), ("proj", "cluster"), ("cluster", "out")],
        14,
    );
    let mut inputs = InputsMap::new();
    inputs.insert("src".into(), plain_stream(14, 400));
    cases.push(Case { name: "hash-kmeans", pipeline: p, inputs, input_eps: 100.0 });

    // 5: per-key window summaries.
    let p = pipeline(
        vec![
            op("src", OpKind::Source),
            op("agg", OpKind::Summarize).with_param("window_ms", 200.0),
            op("out", OpKind::Sink),
        ],
        vec![("src", "agg"), ("agg", "out")],
        15,
    );
    let mut inputs = InputsMap::new();
    inputs.insert("src".into(), plain_stream(15, 500));
    cases.push(Case { name: "summarize", pipeline: p, inputs, input_eps: 100.0 });

    // 6: anomaly scoring fanned out by a splitter (6 operators).
    let rules = SplitRuleSet {
        rules: vec![SplitRule {
            when: SplitPredicate::FieldCmp {
                field: "anomaly_score".into(),
                cmp: s2ce::connectors::Comparison::Gt,
                value: 2.0,
            },
            target: "alerts".into(),
        }],
        default_target: "normal".into(),
    };
    let p = pipeline(
        vec![
            op("src", OpKind::Source),
            op("score", OpKind::Anomaly),
            op("route", OpKind::Split)
                .with_param("rules", serde_json::to_value(&rules).unwrap()),
            op("alerts", OpKind::Sink),
            op("normal", OpKind::Sink),
            op("probe", OpKind::Identity),
        ],
        vec![
            ("src", "score"),
            ("score", "probe"),
            ("probe", "route"),
            ("route", "alerts"),
            ("route", "normal"),
        ],
        16,
    );
    let mut inputs = InputsMap::new();
    inputs.insert("src".into(), plain_stream(16, 450));
    cases.push(Case { name: "anomaly-split", pipeline: p, inputs, input_eps: 100.0 });

    // 7: two-stream time join.
    let p = pipeline(
        vec![
            op("left", OpKind::Source),
            op("right", OpKind::Source),
            op("join", OpKind::WindowJoin).with_param("delta_ms", 30.0),
            op("out", OpKind::Sink),
        ],
        vec![("left", "join"), ("right", "join"), ("join", "out")],
        17,
    );
    let mut inputs = InputsMap::new();
    let mut rng = ChaCha12Rng::seed_from_u64(17);
    inputs.insert(
        "left".into(),
        (0..300)
            .map(|i| {
                Event::new(i * 4, format!("k{}", rng.random_range(0..6))).with("l", i as f64)
            })
            .collect(),
    );
    inputs.insert(
        "right".into(),
        (0..300)
            .map(|i| {
                Event::new(i * 4 + 2, format!("k{}", rng.random_range(0..6))).with("r", i as f64)
            })
            .collect(),
    );
    cases.push(Case { name: "window-join", pipeline: p, inputs, input_eps: 100.0 });

    // 8: delayed labels.
    let p = pipeline(
        vec![
            op("instances", OpKind::Source),
            op("labels", OpKind::Source),
            op("join", OpKind::DelayedLabelJoin).with_param("timeout_ms", 120.0),
            op("out", OpKind::Sink),
        ],
        vec![("instances", "join"), ("labels", "join"), ("join", "out")],
        18,
    );
    let mut inputs = InputsMap::new();
    let mut rng = ChaCha12Rng::seed_from_u64(18);
    inputs.insert(
        "instances".into(),
        (0..300)
            .map(|i| {
                Event::new(i * 5, "k")
                    .with("x", i as f64)
                    .with_instance_id(format!("i{i}"))
            })
            .collect(),
    );
    inputs.insert(
        "labels".into(),
        (0..300)
            .filter(|i| i % 4 != 3)
            .map(|i| {
                let delay = rng.random_range(1..100);
                Event::new(i * 5 + delay, "k")
                    .with_instance_id(format!("i{i}"))
                    .with_label(if i % 2 == 0 { "yes" } else { "no" })
            })
            .collect(),
    );
    // Labels must arrive time-sorted.
    inputs.get_mut("labels").unwrap().sort_by_key(|e| e.ts);
    cases.push(Case { name: "delayed-labels", pipeline: p, inputs, input_eps: 100.0 });

    // 9: full learn chain (5 operators).
    let (stream, schema) = labeled_stream(19, 500);
    let mut p = pipeline(
        vec![
            op("src", OpKind::Source),
            op("norm", OpKind::Normalize),
            op("score", OpKind::Anomaly),
            op("learn", OpKind::Hoeffding).with_param("detector", "adwin"),
            op("out", OpKind::Sink),
        ],
        vec![("src", "norm"), ("norm", "score"), ("score", "learn"), ("learn", "out")],
        19,
    );
    p.schema = Some(schema);
    let mut inputs = InputsMap::new();
    inputs.insert("src".into(), stream);
    cases.push(Case { name: "learn-chain", pipeline: p, inputs, input_eps: 100.0 });

    // 10: reservoir extraction.
    let p = pipeline(
        vec![
            op("src", OpKind::Source),
            op("pass", OpKind::Identity),
            op("res", OpKind::ReservoirSample).with_param("k", 32),
            op("out", OpKind::Sink),
        ],
        vec![("src", "pass"), ("pass", "res"), ("res", "out")],
        20,
    );
    let mut inputs = InputsMap::new();
    inputs.insert("src".into(), plain_stream(20, 400));
    cases.push(Case { name: "reservoir", pipeline: p, inputs, input_eps: 100.0 });

    cases
}

/// Every capacity-feasible total placement (pins respected) of the
/// pipeline on the cluster.
pub fn enumerate_feasible_placements(
    p: &PipelineSpec,
    c: &ClusterSpec,
    input_eps: f64,
) -> Vec<Placement> {
    let op_ids: Vec<&str> = p.operators.iter().map(|o| o.id.as_str()).collect();
    let node_ids: Vec<&str> = c.nodes.iter().map(|n| n.id.as_str()).collect();
    let mut all = Vec::new();
    let mut assignment = vec![0usize; op_ids.len()];
    loop {
        let mut pl = Placement::default();
        for (op, node) in op_ids.iter().zip(&assignment) {
            pl.assign(op, node_ids[*node]);
        }
        if validate_placement(p, c, &pl, input_eps).is_empty() {
            all.push(pl);
        }
        let mut i = assignment.len();
        loop {
            if i == 0 {
                return all;
            }
            i -= 1;
            assignment[i] += 1;
            if assignment[i] < node_ids.len() {
                break;
            }
            assignment[i] = 0;
        }
        if assignment.iter().all(|&x| x == 0) {
            return all;
        }
    }
}

pub fn first_feasible_placement(p: &PipelineSpec, c: &ClusterSpec, input_eps: f64) -> Placement {
    enumerate_feasible_placements(p, c, input_eps)
        .into_iter()
        .next()
        .expect("at least one feasible placement")
}

/// Random small placement instance for the quality suite: 2-6 operators on
/// 2-4 nodes with generous capacities and a lenient SLA.
pub fn random_placement_instance(
    rng: &mut ChaCha12Rng,
) -> (PipelineSpec, ClusterSpec, Objective, f64) {
    let n_ops = rng.random_range(2..=6);
    let n_nodes = rng.random_range(2..=4);

    let mut operators = Vec::new();
    let mut edges = Vec::new();
    for i in 0..n_ops {
        let kind = if i == 0 {
            OpKind::Source
        } else if i == n_ops - 1 {
            OpKind::Sink
        } else {
            OpKind::Identity
        };
        let mut spec = OperatorSpec::new(format!("op{i}"), kind);
        spec.cpu_demand = rng.random_range(0.2..2.0);
        spec.mem_demand = rng.random_range(16.0..256.0);
        operators.push(spec);
        if i > 0 {
            edges.push(EdgeSpec::new(&format!("op{}", i - 1), &format!("op{i}")));
        }
    }
    for i in 0..n_ops {
        for j in (i + 2)..n_ops {
            if rng.random_bool(0.15) {
                edges.push(EdgeSpec::new(&format!("op{i}"), &format!("op{j}")));
            }
        }
    }
    for e in &mut edges {
        e.est_bytes_per_event = rng.random_range(64.0..2048.0);
    }
    let p = PipelineSpec {
        operators,
        edges,
        sla: SlaSpec {
            max_p95_latency_ms: 5_000.0,
            min_throughput_eps: 1.0,
            max_monetary_cost: 5_000.0,
        },
        seed: 0,
        schema: None,
    };

    let mut nodes = Vec::new();
    for i in 0..n_nodes {
        if i % 2 == 0 {
            nodes.push(NodeSpec::cloud(
                &format!("n{i}"),
                rng.random_range(3.0..8.0),
                4096.0,
                rng.random_range(0.1..1.0),
            ));
        } else {
            nodes.push(NodeSpec::edge(
                &format!("n{i}"),
                rng.random_range(1.5..4.0),
                2048.0,
                rng.random_range(0.5..2.0),
            ));
        }
    }
    let mut links = Vec::new();
    for i in 0..n_nodes {
        for j in (i + 1)..n_nodes {
            links.push(LinkSpec::new(
                &format!("n{i}"),
                &format!("n{j}"),
                rng.random_range(1.0..20.0),
                rng.random_range(10.0..100.0),
            ));
        }
    }
    let c = ClusterSpec { nodes, links };

    let obj = Objective {
        w_lat: rng.random_range(0.2..2.0),
        w_energy: rng.random_range(0.05..0.5),
        w_money: rng.random_range(0.2..2.0),
    };
    let input_eps = rng.random_range(50.0..400.0);
    (p, c, obj, input_eps)
}

/// The scripted overload scenario driven through the simulator.
pub struct ControllerScenario {
    pub pipeline: PipelineSpec,
    pub cluster: ClusterSpec,
    pub placement: Placement,
    pub input_eps: f64,
    pub duration_s: f64,
}

pub fn controller_scenario() -> ControllerScenario {
    let mut src = OperatorSpec::new("src", OpKind::Source);
    src.cpu_demand = 0.5;
    let mut mid = OperatorSpec::new("mid", OpKind::Identity);
    mid.cpu_demand = 2.0;
    mid.state_size = 1.0;
    let mut out = OperatorSpec::new("out", OpKind::Sink);
    out.cpu_demand = 0.5;
    let pipeline = PipelineSpec {
        operators: vec![src, mid, out],
        edges: vec![
            EdgeSpec::new("src", "mid"),
            EdgeSpec::new("mid", "out"),
        ],
        sla: SlaSpec {
            max_p95_latency_ms: 2_000.0,
            min_throughput_eps: 10.0,
            max_monetary_cost: 1_000.0,
        },
        seed: 7,
        schema: None,
    };
    let cluster = ClusterSpec {
        nodes: vec![
            NodeSpec::cloud("cloud1", 8.0, 8192.0, 0.5),
            NodeSpec::edge("edge1", 1.0, 1024.0, 1.0),
        ],
        links: vec![LinkSpec::new("cloud1", "edge1", 2.0, 80.0)],
    };
    // Everything pressed onto the small edge node: utilization ~1.8.
    let mut placement = Placement::default();
    for op in ["src", "mid", "out"] {
        placement.assign(op, "edge1");
    }
    ControllerScenario {
        pipeline,
        cluster,
        placement,
        input_eps: 600.0,
        duration_s: 20.0,
    }
}

pub fn run_controller_scenario(s: &ControllerScenario) -> SimOutput {
    let mut state =
        s2ce::orchestrate::ControllerState::new(s2ce::orchestrate::ControllerCfg::default());
    run_simulated(
        &s.pipeline,
        &s.cluster,
        &s.placement,
        &WorkloadSchedule::constant(s.input_eps),
        s.duration_s,
        s.pipeline.seed,
        Some((&mut state, Objective::default())),
        &CostModelCfg::default(),
    )
    .unwrap()
}

/// Hand simulation of the controller contract over the measured
/// utilization sequence: deadband with patience 3 and cooldown 5, shedding
/// the heaviest movable operator of the hot node. Returns the expected
/// (interval, operator) migrations.
pub fn replay_controller_rules(
    s: &ControllerScenario,
    out: &SimOutput,
) -> Vec<(u64, String)> {
    let cfg = s2ce::orchestrate::ControllerCfg::default();
    let mut counters: std::collections::BTreeMap<&str, u32> = Default::default();
    let mut cooldown = 0u32;
    let mut placement = s.placement.clone();
    let mut fired = Vec::new();
    for frame in &out.metrics {
        let mut hot: Option<(&str, f64)> = None;
        for (node, util) in &frame.node_util {
            let counter = counters.entry(node.as_str()).or_insert(0);
            if *util > cfg.hi {
                *counter += 1;
            } else {
                *counter = 0;
            }
            if *counter >= cfg.patience && hot.as_ref().is_none_or(|(_, u)| util > u) {
                hot = Some((node.as_str(), *util));
            }
        }
        if cooldown > 0 {
            cooldown -= 1;
            continue;
        }
        if let Some((node, _)) = hot {
            // Heaviest movable operator on the hot node (uniform event
            // rate, so cpu_demand alone decides; ties by id).
            let heaviest = s
                .pipeline
                .operators
                .iter()
                .filter(|o| o.movable && placement.node_of(&o.id) == Some(node))
                .max_by(|a, b| {
                    a.cpu_demand
                        .partial_cmp(&b.cpu_demand)
                        .unwrap()
                        .then(b.id.cmp(&a.id))
                })
                .map(|o| o.id.clone());
            if let Some(op) = heaviest {
                fired.push((frame.interval, op.clone()));
                // The sim applies the migration; mirror it and cool down.
                let target = if node == "edge1" { "cloud1" } else { "edge1" };
                placement.assign(&op, target);
                counters.insert(if node == "edge1" { "edge1" } else { "cloud1" }, 0);
                cooldown = cfg.cooldown;
            }
        }
    }
    fired
}

/// The 4-operator throughput chain: parse -> normalize -> sample -> learn,
/// fed with pre-encoded raw records.
pub fn bench_chain(n: usize) -> (PipelineSpec, InputsMap) {
    let mut spec = GeneratorSpec::new(GenKind::Hyperplane, 10, 99);
    spec.noise_prob = 0.02;
    spec.concept = Some(ConceptSpec::Hyperplane {
        w: vec![1.0; 10],
        theta: 5.0,
    });
    let generator = build_generator(&spec).unwrap();
    let schema = generator.schema();
    let raw: Vec<Event> = generator
        .take(n)
        .enumerate()
        .map(|(i, e)| {
            let line = String::from_utf8(s2ce::connectors::encode_event(&e)).unwrap();
            Event::new(i as i64, "").with("raw", Value::Cat(line))
        })
        .collect();

    let mut pipeline = PipelineSpec {
        operators: vec![
            {
                let mut s = OperatorSpec::new("src", OpKind::Source);
                s.cpu_demand = 0.1;
                s
            },
            op("parse", OpKind::Parse),
            op("normalize", OpKind::Normalize),
            op("sample", OpKind::Sample).with_param("rate", 0.9),
            op("learn", OpKind::Hoeffding).with_param("detector", "none"),
            {
                let mut s = OperatorSpec::new("out", OpKind::Sink);
                s.cpu_demand = 0.1;
                s
            },
        ],
        edges: vec![
            EdgeSpec::new("src", "parse"),
            EdgeSpec::new("parse", "normalize"),
            EdgeSpec::new("normalize", "sample"),
            EdgeSpec::new("sample", "learn"),
            EdgeSpec::new("learn", "out"),
        ],
        sla: SlaSpec::default(),
        seed: 99,
        schema: None,
    };
    pipeline.schema = Some(schema);
    let mut inputs = InputsMap::new();
    inputs.insert("src".into(), raw);
    (pipeline, inputs)
}

/// Schema-free random event covering all value kinds (a copy of the unit
/// suites' helper, which integration tests cannot reach).
pub fn random_event(rng: &mut impl Rng, id: u64) -> Event {
    let mut e = Event::new(
        rng.random_range(0..10_000_000),
        format!("k{}", rng.random_range(0..100)),
    )
    .with_source("test");
    for f in 0..rng.random_range(1..6usize) {
        let name = format!("f{f}");
        match rng.random_range(0..3u8) {
            0 => {
                e.values.insert(name, Value::Num(rng.random_range(-1e6..1e6)));
            }
            1 => {
                e.values
                    .insert(name, Value::Cat(format!("c{}", rng.random_range(0..10))));
            }
            _ => {
                e.values.insert(name, Value::Missing);
            }
        }
    }
    if rng.random_bool(0.3) {
        e.label = Some(format!("L{}", rng.random_range(0..3)));
    }
    if rng.random_bool(0.3) {
        e.instance_id = Some(format!("i{id}"));
    }
    e
}
