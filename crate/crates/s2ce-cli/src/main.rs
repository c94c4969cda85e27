mod commands;
mod manifest;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Desk-scale hybrid cloud/edge stream-mining orchestrator.
#[derive(Debug, Parser)]
#[command(name = "s2ce", version, about)]
struct Cli {
    /// RNG seed; overrides the config's seed. The S2CE_SEED environment
    /// variable overrides both.
    #[arg(long, global = false)]
    seed: Option<u64>,
    /// Directory all artifacts are written into.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Suppress progress chatter on stdout.
    #[arg(long, default_value_t = false)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic stream and its drift ground truth.
    Generate(GenerateArgs),
    /// Compute a placement for a pipeline on a cluster.
    Place(PlaceArgs),
    /// Execute a placed pipeline (deterministic, concurrent, or simulated).
    Run(RunArgs),
    /// Render a saved model state as a rule report.
    Explain(ExplainArgs),
    /// Tune runtime knobs by successive halving on the concurrent runtime.
    Bench(BenchArgs),
    /// Check config files and print violations.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// Config file with a `generator` section.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    count: u64,
    /// Output stream file (within --out); `<file>.drift` is written beside
    /// it.
    #[arg(long = "out", default_value = "stream.jsonl")]
    out_file: PathBuf,
}

#[derive(Debug, Args)]
struct PlaceArgs {
    /// Config file with a `pipeline` section.
    #[arg(long)]
    pipeline: PathBuf,
    /// Config file with a `cluster` section (may be the same file).
    #[arg(long)]
    cluster: PathBuf,
    /// Scalarization weights, e.g. `lat=1,energy=0.1,money=1`.
    #[arg(long)]
    objective: Option<String>,
    /// Refine the greedy placement with local search.
    #[arg(long, default_value_t = false)]
    optimize: bool,
    /// Design input rate; defaults to the SLA's throughput floor.
    #[arg(long)]
    input_eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum RunMode {
    /// Single-threaded, byte-reproducible.
    LocalDet,
    /// One worker per operator, bounded queues.
    LocalConc,
    /// Discrete-event simulation on the virtual clock.
    Sim,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    pipeline: PathBuf,
    #[arg(long)]
    cluster: PathBuf,
    /// placement.json from `place`; computed greedily when absent.
    #[arg(long)]
    placement: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = RunMode::LocalDet)]
    mode: RunMode,
    /// Metrics CSV file name (within --out).
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Run the offloading controller each interval (sim mode).
    #[arg(long, default_value_t = false)]
    controller: bool,
    /// Simulated duration, seconds.
    #[arg(long, default_value_t = 30.0)]
    duration_s: f64,
    /// Input rate for simulation and placement.
    #[arg(long)]
    input_eps: Option<f64>,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    #[arg(long, default_value_t = 256)]
    queue_capacity: usize,
}

#[derive(Debug, Args)]
struct ExplainArgs {
    /// Model state file written by a run.
    #[arg(long)]
    model: PathBuf,
    /// Pipeline config whose schema the model must match.
    #[arg(long)]
    pipeline: Option<PathBuf>,
    /// Render despite a fingerprint mismatch.
    #[arg(long, default_value_t = false)]
    force: bool,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[arg(long)]
    pipeline: PathBuf,
    /// Total event budget across all halving rounds.
    #[arg(long, default_value_t = 100_000)]
    events: u64,
    /// Knob candidate, e.g. `batch=64,parallelism=1,queue=256`; repeat for
    /// a grid.
    #[arg(long = "knob", required = true)]
    knobs: Vec<String>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Config files to check.
    #[arg(required = true)]
    configs: Vec<PathBuf>,
}

/// Exit codes: 0 clean, 1 config error, 2 runtime abort, 3 infeasible.
fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code)
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    Infeasible(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) | CliError::Runtime(m) | CliError::Infeasible(m) => f.write_str(m),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Infeasible(_) => 3,
        }
    }
}

pub(crate) fn run(cli: Cli) -> Result<(), CliError> {
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| CliError::Config(format!("cannot create --out {}: {e}", cli.out.display())))?;
    let env_seed = std::env::var("S2CE_SEED")
        .ok()
        .map(|s| {
            s.parse::<u64>()
                .map_err(|_| CliError::Config(format!("S2CE_SEED={s} is not a u64")))
        })
        .transpose()?;
    let seed = env_seed.or(cli.seed);
    let ctx = commands::Ctx {
        out_dir: cli.out.clone(),
        seed,
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Generate(args) => commands::generate(&ctx, args),
        Command::Place(args) => commands::place(&ctx, args),
        Command::Run(args) => commands::run(&ctx, args),
        Command::Explain(args) => commands::explain(&ctx, args),
        Command::Bench(args) => commands::bench(&ctx, args),
        Command::Validate(args) => commands::validate(&ctx, args),
    }
}
