use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vesonet::audit;
use vesonet::content_embed::{
    build_content_graph, generate_log, read_log_csv, train_embeddings, write_log_csv, EmbeddingParams, LogSpec,
};
use vesonet::provider_rl::{run_two_exit_toy, write_checkpoint, write_curve_csv, DqnConfig};
use vesonet::road_net::GridSpec;
use vesonet::sim::{
    run_scenario, run_sweep, write_events, write_sweep_csv, NetworkSource, Policy, Scenario, SimError, SweepAxis,
    SweepSpec,
};

const EXIT_INVALID: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_AUDIT: u8 = 3;

#[derive(Parser)]
#[command(name = "vesonet", version, about = "Social-aware vehicular content dissemination simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and list every problem found.
    Validate(ConfigArg),
    /// Write a scenario JSON for a synthetic grid.
    GenScenario(GenScenario),
    /// Write a planted-cluster consumption log and its cluster labels.
    GenLog(GenLog),
    /// Run one simulation and write events, metrics and the RL curve.
    Run(RunArgs),
    /// Run a parameter sweep for both policies.
    Sweep(SweepArgs),
    /// Train the provider DQN, on a scenario or on the two-exit toy.
    TrainRl(TrainRl),
    /// Train content embeddings from a consumption log.
    TrainEmbed(TrainEmbed),
    /// Recompute metrics from an event log and check invariants.
    Audit(AuditArgs),
}

#[derive(Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct GenScenario {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid size (rows = cols).
    #[arg(long, default_value_t = 4)]
    grid: u32,
    #[arg(long, default_value_t = 70)]
    consumers: u32,
    #[arg(long, default_value_t = 30)]
    providers: u32,
    #[arg(long, default_value_t = 2)]
    rsus: usize,
    #[arg(long, default_value_t = 0)]
    accidents: usize,
    #[arg(long, default_value = "vesonet")]
    policy: Policy,
}

#[derive(Args)]
struct GenLog {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 200)]
    users: u32,
    #[arg(long, default_value_t = 200)]
    items: u32,
    #[arg(long, default_value_t = 2)]
    clusters: u32,
    #[arg(long, default_value_t = 20)]
    history: u32,
    /// Probability of consuming outside the user's cluster.
    #[arg(long, default_value_t = 0.05)]
    inter: f64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    policy: Option<Policy>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    axis: SweepAxis,
    /// Comma-separated axis values, at least two.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,
    /// Restrict to one policy; both by default.
    #[arg(long)]
    policy: Option<Policy>,
    #[arg(long, default_value_t = 1)]
    replicates: u32,
    /// Parallel runs; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct TrainRl {
    /// Scenario to train in; the two-exit toy when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Toy training steps.
    #[arg(long, default_value_t = 2000)]
    steps: u64,
}

#[derive(Args)]
struct TrainEmbed {
    #[arg(long)]
    log: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dimension: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
}

#[derive(Args)]
struct AuditArgs {
    /// Event log CSV.
    events: PathBuf,
    /// Runner metrics to compare against.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Write the recomputed metrics here.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure(u8, String);

impl Failure {
    fn runtime(msg: impl Into<String>) -> Self {
        Failure(EXIT_RUNTIME, msg.into())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::runtime(e.to_string())
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Invalid(_) => Failure(EXIT_INVALID, e.to_string()),
            _ => Failure::runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("VESONET_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Validate(a) => validate(&a.config),
        Command::GenScenario(a) => gen_scenario(a),
        Command::GenLog(a) => gen_log(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::TrainRl(a) => train_rl(a),
        Command::TrainEmbed(a) => train_embed(a),
        Command::Audit(a) => audit_cmd(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
    let mut sc = Scenario::from_json(&text).map_err(|p| {
        Failure(
            EXIT_INVALID,
            format!("{}:{}:{}: {}", path.display(), p.line, p.column, p.message),
        )
    })?;
    sc.resolve_paths(path.parent().unwrap_or(Path::new(".")));
    let errs = sc.validate();
    if !errs.is_empty() {
        return Err(Failure(EXIT_INVALID, format!("{}:\n  {}", path.display(), errs.join("\n  "))));
    }
    Ok(sc)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    fs::create_dir_all(dir)?;
    let p = dir.join(name);
    info!("writing {}", p.display());
    File::create(&p)
        .map(BufWriter::new)
        .map_err(|e| Failure::runtime(format!("{}: {e}", p.display())))
}

fn validate(path: &Path) -> Result<(), Failure> {
    let sc = load(path)?;
    sc.build_network()
        .map_err(|e| Failure(EXIT_INVALID, format!("network: {e}")))?;
    println!("{}: ok", path.display());
    Ok(())
}

fn gen_scenario(a: GenScenario) -> Result<(), Failure> {
    let mut sc = Scenario::default();
    if let Some(s) = a.seed {
        sc.rng_seed = s;
    }
    sc.network = NetworkSource::Grid(GridSpec {
        rows: a.grid,
        cols: a.grid,
        ..Default::default()
    });
    sc.vehicles.consumers = a.consumers;
    sc.vehicles.providers = a.providers;
    sc.policy = a.policy;
    let net = sc.build_network().map_err(|e| Failure(EXIT_INVALID, e))?;
    sc.rsus = Scenario::spread_rsus(&net, a.rsus);
    sc.accidents = sc.random_accidents(&net, a.accidents);
    let mut w = create(&a.out, "scenario.json")?;
    writeln!(w, "{}", sc.to_json())?;
    w.flush()?;
    Ok(())
}

fn gen_log(a: GenLog) -> Result<(), Failure> {
    let mut spec = LogSpec {
        users: a.users,
        items: a.items,
        clusters: a.clusters,
        history_len: a.history,
        inter_cluster_prob: a.inter,
        ..Default::default()
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let log = generate_log(&spec).map_err(|e| Failure(EXIT_INVALID, e.to_string()))?;
    write_log_csv(&log.records, create(&a.out, "log.csv")?).map_err(|e| Failure::runtime(e.to_string()))?;
    log.write_labels_csv(create(&a.out, "labels.csv")?)
        .map_err(|e| Failure::runtime(e.to_string()))?;
    info!("{} consumption records", log.records.len());
    Ok(())
}

fn run(a: RunArgs) -> Result<(), Failure> {
    let mut sc = load(&a.config)?;
    if let Some(s) = a.seed {
        sc.rng_seed = s;
    }
    if let Some(p) = a.policy {
        sc.policy = p;
    }
    info!("running {} for {} ticks", sc.policy.name(), sc.run_length);
    let out = run_scenario(&sc)?;
    write_events(&out.events, create(&a.out, "events.csv")?)?;
    let mut m = create(&a.out, "metrics.csv")?;
    m.write_all(out.metrics.to_csv().as_bytes())?;
    m.flush()?;
    if !out.curve.is_empty() {
        write_curve_csv(&out.curve, create(&a.out, "curve.csv")?).map_err(|e| Failure::runtime(e.to_string()))?;
    }
    print!("{}", out.metrics.to_csv());
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<(), Failure> {
    let mut sc = load(&a.config)?;
    if let Some(s) = a.seed {
        sc.rng_seed = s;
    }
    if a.values.len() < 2 {
        return Err(Failure(EXIT_INVALID, "--values needs at least two entries".into()));
    }
    let spec = SweepSpec {
        axis: a.axis,
        values: a.values,
        policies: match a.policy {
            Some(p) => vec![p],
            None => vec![Policy::Vesonet, Policy::BaselineNoReroute],
        },
        replicates: a.replicates.max(1),
        jobs: a.jobs,
        keep_events: false,
    };
    info!(
        "sweeping {} over {} values, {} replicates",
        spec.axis.name(),
        spec.values.len(),
        spec.replicates
    );
    let (rows, _) = run_sweep(&sc, &spec)?;
    write_sweep_csv(&rows, create(&a.out, "sweep.csv")?)?;
    Ok(())
}

fn train_rl(a: TrainRl) -> Result<(), Failure> {
    let (curve, net) = match &a.config {
        Some(path) => {
            let mut sc = load(path)?;
            if let Some(s) = a.seed {
                sc.rng_seed = s;
            }
            sc.policy = Policy::Vesonet;
            let out = run_scenario(&sc)?;
            let Some(agent) = out.agents.first() else {
                return Err(Failure(EXIT_INVALID, "scenario has no provider vehicles".into()));
            };
            if out.agents.len() > 1 {
                warn!("{} agents trained; writing the first", out.agents.len());
            }
            (out.curve, agent.online().clone())
        }
        None => {
            let toy = run_two_exit_toy(DqnConfig::default(), a.steps, 1000, a.seed.unwrap_or(1))
                .map_err(|e| Failure::runtime(e.to_string()))?;
            println!("greedy_accuracy,{}", toy.greedy_accuracy);
            (toy.curve, toy.agent.online().clone())
        }
    };
    write_curve_csv(&curve, create(&a.out, "curve.csv")?).map_err(|e| Failure::runtime(e.to_string()))?;
    write_checkpoint(&net, create(&a.out, "checkpoint.csv")?).map_err(|e| Failure::runtime(e.to_string()))?;
    Ok(())
}

fn train_embed(a: TrainEmbed) -> Result<(), Failure> {
    let f = File::open(&a.log).map_err(|e| Failure::runtime(format!("{}: {e}", a.log.display())))?;
    let log = read_log_csv(BufReader::new(f)).map_err(|e| Failure(EXIT_INVALID, format!("{}: {e}", a.log.display())))?;
    let mut params = EmbeddingParams::default();
    if let Some(s) = a.seed {
        params.rng_seed = s;
    }
    if let Some(d) = a.dimension {
        params.dimension = d;
    }
    if let Some(e) = a.epochs {
        params.epochs = e;
    }
    let errs = params.validate();
    if !errs.is_empty() {
        return Err(Failure(EXIT_INVALID, errs.join("; ")));
    }
    let graph = build_content_graph(&log, 1).map_err(|e| Failure(EXIT_INVALID, e.to_string()))?;
    info!("content graph: {} items, {} edges", graph.node_count(), graph.edge_count());
    let model = train_embeddings(&graph, &params).map_err(|e| Failure::runtime(e.to_string()))?;
    model
        .write_csv(create(&a.out, "embeddings.csv")?)
        .map_err(|e| Failure::runtime(e.to_string()))?;
    Ok(())
}

fn audit_cmd(a: AuditArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&a.events).map_err(|e| Failure::runtime(format!("{}: {e}", a.events.display())))?;
    let rows = audit::parse_log(&text).map_err(|bad| {
        let lines: Vec<String> = bad.iter().map(ToString::to_string).collect();
        Failure::runtime(format!("{}: malformed rows\n  {}", a.events.display(), lines.join("\n  ")))
    })?;
    let report = audit::audit_rows(&rows);
    print!("{}", report.metrics.to_csv());
    if let Some(dir) = &a.out {
        let mut w = create(dir, "audit_metrics.csv")?;
        w.write_all(report.metrics.to_csv().as_bytes())?;
        w.flush()?;
    }
    let mut problems = report.violations.clone();
    if let Some(p) = &a.metrics {
        let text = fs::read_to_string(p).map_err(|e| Failure::runtime(format!("{}: {e}", p.display())))?;
        let runner = audit::parse_metrics_csv(&text).map_err(|bad| {
            let lines: Vec<String> = bad.iter().map(ToString::to_string).collect();
            Failure::runtime(format!("{}: malformed rows\n  {}", p.display(), lines.join("\n  ")))
        })?;
        problems.extend(audit::compare(&report.metrics, &runner));
    }
    if problems.is_empty() {
        eprintln!("audit: ok");
        Ok(())
    } else {
        Err(Failure(EXIT_AUDIT, format!("audit failed\n  {}", problems.join("\n  "))))
    }
}
