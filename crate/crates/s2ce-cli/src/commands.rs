use crate::manifest::RunManifest;
use crate::{
    BenchArgs, CliError, ExplainArgs, GenerateArgs, PlaceArgs, RunArgs, RunMode, ValidateArgs,
};
use s2ce::config::ConfigDoc;
use s2ce::generate::{build_generator, fit_generator, GenKind, StreamGenerator};
use s2ce::learn::{explain_model, ModelState};
use s2ce::model::{ClusterSpec, Placement, PipelineSpec};
use s2ce::orchestrate::{
    estimate_cost, place_greedy, place_local_search, tune_parameters, BenchOutcome, ControllerCfg,
    ControllerState, CostModelCfg, Objective, OrchestrateError, RuntimeKnobs,
};
use s2ce::runtime::{
    materialize_inputs, run_concurrent, run_deterministic, run_simulated, write_decisions_csv,
    write_metrics_csv, RunOutput, RuntimeError, WorkloadSchedule,
};
use std::path::{Path, PathBuf};

pub struct Ctx {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub quiet: bool,
}

impl Ctx {
    fn say(&self, text: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", text.as_ref());
        }
    }

    fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.out_dir.join(path)
        }
    }
}

fn load_config(path: &Path) -> Result<ConfigDoc, CliError> {
    ConfigDoc::load(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .validated()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn load_pipeline(path: &Path) -> Result<PipelineSpec, CliError> {
    load_config(path)?
        .pipeline
        .ok_or_else(|| CliError::Config(format!("{}: no `pipeline` section", path.display())))
}

fn load_cluster(path: &Path) -> Result<ClusterSpec, CliError> {
    load_config(path)?
        .cluster
        .ok_or_else(|| CliError::Config(format!("{}: no `cluster` section", path.display())))
}

fn parse_objective(text: Option<&str>) -> Result<Objective, CliError> {
    let mut obj = Objective::default();
    let Some(text) = text else { return Ok(obj) };
    for part in text.split(',') {
        let Some((key, value)) = part.split_once('=') else {
            return Err(CliError::Config(format!("objective term `{part}` is not key=value")));
        };
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("objective weight `{value}` is not a number")))?;
        match key.trim() {
            "lat" => obj.w_lat = value,
            "energy" => obj.w_energy = value,
            "money" => obj.w_money = value,
            other => return Err(CliError::Config(format!("unknown objective term `{other}`"))),
        }
    }
    Ok(obj)
}

fn parse_knob(text: &str) -> Result<RuntimeKnobs, CliError> {
    let mut knobs = RuntimeKnobs::default();
    for part in text.split(',') {
        let Some((key, value)) = part.split_once('=') else {
            return Err(CliError::Config(format!("knob term `{part}` is not key=value")));
        };
        let value: usize = value
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("knob value `{value}` is not an integer")))?;
        match key.trim() {
            "batch" | "batch_size" => knobs.batch_size = value,
            "parallelism" | "par" => knobs.parallelism = value,
            "queue" | "queue_capacity" => knobs.queue_capacity = value,
            other => return Err(CliError::Config(format!("unknown knob `{other}`"))),
        }
    }
    Ok(knobs)
}

fn effective_seed(ctx: &Ctx, config_seed: u64) -> u64 {
    ctx.seed.unwrap_or(config_seed)
}

pub fn generate(ctx: &Ctx, args: GenerateArgs) -> Result<(), CliError> {
    let doc = load_config(&args.spec)?;
    let mut spec = doc
        .generator
        .ok_or_else(|| CliError::Config(format!("{}: no `generator` section", args.spec.display())))?;
    spec.seed = effective_seed(ctx, spec.seed);

    let out_path = ctx.resolve(&args.out_file);
    let drift_path = out_path.with_extension(format!(
        "{}drift",
        out_path
            .extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default()
    ));
    let mut manifest = RunManifest::start(
        "generate",
        &[args.spec.as_path()],
        spec.seed,
        None,
        &ctx.out_dir,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;

    let generator = build_source_generator(&spec)?;
    let boundaries: Vec<_> = generator.ground_truth().to_vec();
    let started = std::time::Instant::now();
    let events: Vec<_> = generator.take(args.count as usize).collect();
    s2ce::connectors::write_events(&out_path, &events)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    let mut drift_csv = String::from("event_n,kind\n");
    for b in &boundaries {
        drift_csv.push_str(&format!("{},{}\n", b.event_n, b.kind));
    }
    std::fs::write(&drift_path, drift_csv).map_err(|e| CliError::Runtime(e.to_string()))?;

    let elapsed = started.elapsed().as_secs_f64();
    for p in [&out_path, &drift_path] {
        manifest.add_artifact(p).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    manifest
        .finalize(&ctx.out_dir)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    ctx.say(format!(
        "wrote {} events to {} ({:.0} events/s)",
        events.len(),
        out_path.display(),
        events.len() as f64 / elapsed.max(1e-9)
    ));
    Ok(())
}

fn build_source_generator(spec: &s2ce::generate::GeneratorSpec) -> Result<StreamGenerator, CliError> {
    if spec.kind == GenKind::Fitted {
        let path = spec
            .fit_from
            .as_deref()
            .ok_or_else(|| CliError::Config("fitted generator needs fit_from".into()))?;
        let sample =
            s2ce::connectors::read_events(path).map_err(|e| CliError::Config(e.to_string()))?;
        let model = fit_generator(&sample, spec.bins).map_err(|e| CliError::Config(e.to_string()))?;
        StreamGenerator::from_fitted(model, spec).map_err(|e| CliError::Config(e.to_string()))
    } else {
        build_generator(spec).map_err(|e| CliError::Config(e.to_string()))
    }
}

fn compute_placement(
    p: &PipelineSpec,
    c: &ClusterSpec,
    obj: &Objective,
    input_eps: f64,
    optimize: bool,
) -> Result<Placement, CliError> {
    let cfg = CostModelCfg::default();
    let greedy = place_greedy(p, c, obj, input_eps, &cfg).map_err(|e| match e {
        OrchestrateError::PlacementInfeasible(op) => {
            CliError::Infeasible(format!("no feasible node for operator {op}"))
        }
        other => CliError::Config(other.to_string()),
    })?;
    Ok(if optimize {
        place_local_search(p, c, obj, greedy, input_eps, &cfg, 200)
    } else {
        greedy
    })
}

pub fn place(ctx: &Ctx, args: PlaceArgs) -> Result<(), CliError> {
    let pipeline = load_pipeline(&args.pipeline)?;
    let cluster = load_cluster(&args.cluster)?;
    let obj = parse_objective(args.objective.as_deref())?;
    let input_eps = args.input_eps.unwrap_or(pipeline.sla.min_throughput_eps);
    let seed = effective_seed(ctx, pipeline.seed);
    let mut manifest = RunManifest::start(
        "place",
        &[args.pipeline.as_path(), args.cluster.as_path()],
        seed,
        None,
        &ctx.out_dir,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;

    let placement = compute_placement(&pipeline, &cluster, &obj, input_eps, args.optimize)?;
    let est = estimate_cost(&pipeline, &cluster, &placement, input_eps, &CostModelCfg::default())
        .map_err(|e| CliError::Config(e.to_string()))?;

    let path = ctx.out_dir.join("placement.json");
    std::fs::write(&path, serde_json::to_string_pretty(&placement).unwrap())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    manifest.add_artifact(&path).map_err(|e| CliError::Runtime(e.to_string()))?;
    manifest
        .finalize(&ctx.out_dir)
        .map_err(|e| CliError::Runtime(e.to_string()))?;

    ctx.say(format!("placement ({} operators):", placement.assignment.len()));
    let width = placement
        .assignment
        .keys()
        .map(|k| k.len())
        .max()
        .unwrap_or(8);
    for (op, node) in &placement.assignment {
        ctx.say(format!("  {op:width$} -> {node}"));
    }
    ctx.say(format!(
        "estimate @ {input_eps} eps: p95 {:.3} ms | throughput {:.0} eps | energy {:.3}/h | money {:.3}/h | scalar {:.3}",
        est.p95_latency_ms,
        est.throughput_eps,
        est.energy_per_hour,
        est.money_per_hour,
        obj.scalar(&est)
    ));
    ctx.say(format!("wrote {}", path.display()));
    Ok(())
}

fn map_runtime_err(e: RuntimeError) -> CliError {
    match e {
        RuntimeError::Invalid(v) => CliError::Config(format!("invalid pipeline: {v:?}")),
        other => CliError::Runtime(other.to_string()),
    }
}

pub fn run(ctx: &Ctx, args: RunArgs) -> Result<(), CliError> {
    let mut pipeline = load_pipeline(&args.pipeline)?;
    let cluster = load_cluster(&args.cluster)?;
    pipeline.seed = effective_seed(ctx, pipeline.seed);
    let input_eps = args.input_eps.unwrap_or(pipeline.sla.min_throughput_eps);
    let obj = Objective::default();

    let placement: Placement = match &args.placement {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => compute_placement(&pipeline, &cluster, &obj, input_eps, false)?,
    };
    let violations = s2ce::orchestrate::validate_placement(&pipeline, &cluster, &placement, input_eps);
    if !violations.is_empty() {
        return Err(CliError::Infeasible(format!("placement invalid: {violations:?}")));
    }

    let mode_name = match args.mode {
        RunMode::LocalDet => "local-det",
        RunMode::LocalConc => "local-conc",
        RunMode::Sim => "sim",
    };
    let mut manifest = RunManifest::start(
        "run",
        &[args.pipeline.as_path(), args.cluster.as_path()],
        pipeline.seed,
        Some(mode_name),
        &ctx.out_dir,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;

    match args.mode {
        RunMode::Sim => {
            let workload = WorkloadSchedule::constant(input_eps);
            let mut controller_state = ControllerState::new(ControllerCfg::default());
            let controller = args.controller.then_some((&mut controller_state, obj));
            let out = run_simulated(
                &pipeline,
                &cluster,
                &placement,
                &workload,
                args.duration_s,
                pipeline.seed,
                controller,
                &CostModelCfg::default(),
            )
            .map_err(map_runtime_err)?;
            if let Some(metrics_path) = &args.metrics {
                let path = ctx.resolve(metrics_path);
                let mut buf = Vec::new();
                write_metrics_csv(&out.metrics, &out.final_placement, &mut buf)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                std::fs::write(&path, buf).map_err(|e| CliError::Runtime(e.to_string()))?;
                manifest.add_artifact(&path).map_err(|e| CliError::Runtime(e.to_string()))?;
            }
            if args.controller {
                let path = ctx.out_dir.join("decisions.csv");
                let mut buf = Vec::new();
                write_decisions_csv(&out.decisions, &mut buf)
                    .map_err(|e| CliError::Runtime(e.to_string()))?;
                std::fs::write(&path, buf).map_err(|e| CliError::Runtime(e.to_string()))?;
                manifest.add_artifact(&path).map_err(|e| CliError::Runtime(e.to_string()))?;
                ctx.say(format!("{} controller decisions", out.decisions.len()));
            }
            ctx.say(format!("simulated {:.0}s of virtual time", args.duration_s));
        }
        RunMode::LocalDet | RunMode::LocalConc => {
            let inputs = materialize_inputs(&pipeline).map_err(map_runtime_err)?;
            let out = match args.mode {
                RunMode::LocalDet => {
                    run_deterministic(&pipeline, &cluster, &placement, &inputs, &[])
                        .map_err(map_runtime_err)?
                }
                _ => {
                    let knobs = RuntimeKnobs {
                        batch_size: args.batch_size,
                        parallelism: args.parallelism,
                        queue_capacity: args.queue_capacity,
                    };
                    run_concurrent(&pipeline, &cluster, &placement, &inputs, &knobs)
                        .map_err(map_runtime_err)?
                }
            };
            write_run_artifacts(ctx, &pipeline, &placement, &out, args.metrics.as_deref(), &mut manifest)?;
            ctx.say(format!(
                "processed {} source events, {} sink events",
                out.source_emitted, out.sink_received
            ));
        }
    }
    manifest
        .finalize(&ctx.out_dir)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    ctx.say(format!("manifest: {}", ctx.out_dir.join("manifest.json").display()));
    Ok(())
}

fn write_run_artifacts(
    ctx: &Ctx,
    pipeline: &PipelineSpec,
    placement: &Placement,
    out: &RunOutput,
    metrics: Option<&Path>,
    manifest: &mut RunManifest,
) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Runtime(e.to_string());
    for (sink, events) in &out.sink_outputs {
        let name = pipeline
            .operator(sink)
            .and_then(|o| o.param_str("path").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(format!("{sink}.jsonl")));
        let path = ctx.resolve(&name);
        s2ce::connectors::write_events(&path, events).map_err(io_err)?;
        manifest.add_artifact(&path).map_err(io_err)?;
    }
    for (op, state) in &out.model_states {
        let path = ctx.out_dir.join(format!("{op}.model"));
        std::fs::write(&path, state.to_bytes()).map_err(io_err)?;
        manifest.add_artifact(&path).map_err(io_err)?;
    }
    if !out.run_log.is_empty() {
        let path = ctx.out_dir.join("run.log");
        std::fs::write(&path, out.run_log.join("\n") + "\n").map_err(io_err)?;
        manifest.add_artifact(&path).map_err(io_err)?;
    }
    if let Some(metrics_path) = metrics {
        let path = ctx.resolve(metrics_path);
        let mut buf = Vec::new();
        write_metrics_csv(&out.metrics, placement, &mut buf).map_err(io_err)?;
        std::fs::write(&path, buf).map_err(io_err)?;
        manifest.add_artifact(&path).map_err(io_err)?;
    }
    Ok(())
}

pub fn explain(ctx: &Ctx, args: ExplainArgs) -> Result<(), CliError> {
    let bytes = std::fs::read(&args.model)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.model.display())))?;
    let state = match &args.pipeline {
        Some(pipeline_path) => {
            let pipeline = load_pipeline(pipeline_path)?;
            let expected = pipeline
                .schema
                .as_ref()
                .map(|s| s.fingerprint())
                .unwrap_or_default();
            ModelState::load_checked(&bytes, expected, args.force)
        }
        None => ModelState::from_bytes(&bytes),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    print!("{}", explain_model(&state));
    let _ = ctx;
    Ok(())
}

pub fn bench(ctx: &Ctx, args: BenchArgs) -> Result<(), CliError> {
    let mut pipeline = load_pipeline(&args.pipeline)?;
    pipeline.seed = effective_seed(ctx, pipeline.seed);
    let candidates: Vec<RuntimeKnobs> = args
        .knobs
        .iter()
        .map(|k| parse_knob(k))
        .collect::<Result<_, _>>()?;

    // One shared single-node cluster and trivial placement: bench measures
    // the runtime, not the cost model.
    let cluster = ClusterSpec {
        nodes: vec![s2ce::model::NodeSpec::cloud("bench", 1e9, 1e9, 0.0)],
        links: vec![],
    };
    let mut placement = Placement::default();
    for op in &pipeline.operators {
        placement.assign(&op.id, "bench");
    }
    let inputs = materialize_inputs(&pipeline).map_err(map_runtime_err)?;
    let total_available: u64 = inputs.values().map(|v| v.len() as u64).sum();
    if total_available == 0 {
        return Err(CliError::Config("bench pipeline produced no input events".into()));
    }

    let mut failure: Option<CliError> = None;
    let (winner, report) = tune_parameters(&candidates, args.events, |knobs, budget| {
        // Trim the feed to the per-round budget, proportionally per source.
        let frac = (budget as f64 / total_available as f64).min(1.0);
        let mut trimmed = inputs.clone();
        for events in trimmed.values_mut() {
            let keep = (events.len() as f64 * frac).ceil() as usize;
            events.truncate(keep.max(1));
        }
        let fed: u64 = trimmed.values().map(|v| v.len() as u64).sum();
        let started = std::time::Instant::now();
        match run_concurrent(&pipeline, &cluster, &placement, &trimmed, knobs) {
            Ok(_) => {
                let elapsed = started.elapsed().as_secs_f64().max(1e-9);
                BenchOutcome {
                    throughput_eps: fed as f64 / elapsed,
                    p95_latency_ms: elapsed * 1000.0,
                }
            }
            Err(e) => {
                if failure.is_none() {
                    failure = Some(map_runtime_err(e));
                }
                BenchOutcome {
                    throughput_eps: 0.0,
                    p95_latency_ms: f64::INFINITY,
                }
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }

    for round in &report.rounds {
        ctx.say(format!("round {} ({} events each):", round.round, round.events_each));
        for (idx, outcome) in &round.ranked {
            let survived = if round.survivors.contains(idx) { "keep" } else { "drop" };
            ctx.say(format!(
                "  [{survived}] knob[{idx}] {:?}: {:.0} eps",
                candidates[*idx], outcome.throughput_eps
            ));
        }
    }
    println!(
        "winner: batch={} parallelism={} queue={}",
        winner.batch_size, winner.parallelism, winner.queue_capacity
    );
    let report_path = ctx.out_dir.join("bench.json");
    std::fs::write(&report_path, serde_json::to_string_pretty(&report).unwrap())
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(())
}

pub fn validate(ctx: &Ctx, args: ValidateArgs) -> Result<(), CliError> {
    let mut clean = true;
    for path in &args.configs {
        let doc = ConfigDoc::load(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let violations = doc.validate();
        if violations.is_empty() {
            ctx.say(format!("{}: ok", path.display()));
        } else {
            clean = false;
            for v in violations {
                println!("{}: {v}", path.display());
            }
        }
    }
    if clean {
        Ok(())
    } else {
        Err(CliError::Config("validation failed".into()))
    }
}
