use std::fs;
use std::net::{Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pacman_core::action_lang::{parse_domain, parse_query};
use pacman_core::envs::DomainKind;
use pacman_core::feedback::{NoiseRegime, Scenario};
use pacman_core::harness::{
    aggregate, export, mean_return, run_experiment, seeds_from, AgentKind, ExperimentConfig,
    HarnessError,
};
use pacman_core::planner::{solve, solve_with_policy, FullAvailability, PlannerConfig, Problem};
use pacman_core::transition::TransitionSystem;
use pacman_teach::ServiceConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Parser)]
#[command(name = "pacman", version, about = "Planner-actor-critic experiments and tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train agents over several seeds and report the learning curve.
    Run(RunArgs),
    /// Solve one planning query with the symbolic planner.
    Plan(PlanArgs),
    /// Start the live teaching service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    domain: Option<DomainKind>,
    /// pacman, ac or qshape.
    #[arg(long)]
    agent: Option<AgentKind>,
    /// none, helpful or misleading.
    #[arg(long)]
    scenario: Option<Scenario>,
    /// ideal, infrequent, inconsistent or both.
    #[arg(long)]
    noise: Option<NoiseRegime>,
    /// Defaults to 500 for fourrooms, 1000 for taxi and 200 for line.
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    /// Seed of the first run; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for results.csv and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key = value` file overriding hyperparameters and defaults. Flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Episodes at the end of each run that the printed mean covers.
    #[arg(long, default_value_t = 100)]
    window: usize,
}

#[derive(Debug, Args)]
struct PlanArgs {
    /// Action description file.
    #[arg(long)]
    domain: PathBuf,
    /// File with `init ...` and `goal ...` statements.
    #[arg(long)]
    query: PathBuf,
    #[arg(long, default_value_t = PlannerConfig::default().maxstamp)]
    maxstamp: u32,
    /// Draw availability from a uniform policy with this seed instead of
    /// making every action available.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    samples_per_state: u32,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    /// Listen on every interface instead of loopback only.
    #[arg(long)]
    public: bool,
    /// Events kept per session for reconnecting clients.
    #[arg(long, default_value_t = ServiceConfig::default().replay_capacity)]
    replay: usize,
    /// Write one JSONL event log per session here.
    #[arg(long)]
    log_dir: Option<PathBuf>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(c) => CliError::Config(c.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| located(path, e))
}

fn located(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

fn default_episodes(domain: DomainKind) -> usize {
    match domain {
        DomainKind::FourRooms => 500,
        DomainKind::Taxi => 1000,
        DomainKind::Line => 200,
    }
}

fn experiment(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::default();
    let mut episodes_from_file = false;
    if let Some(path) = &args.config {
        let text = read(path)?;
        cfg.apply_overrides(&text)
            .map_err(|e| located(path, e))?;
        // apply_overrides has already rejected text that is not a table
        episodes_from_file = text
            .parse::<toml::Table>()
            .is_ok_and(|t| t.contains_key("episodes"));
    }
    if let Some(d) = args.domain {
        cfg.domain = d;
    }
    if let Some(a) = args.agent {
        cfg.agent = a;
    }
    if let Some(s) = args.scenario {
        cfg.scenario = s;
    }
    if let Some(n) = args.noise {
        cfg.noise = n;
    }
    cfg.episodes = match args.episodes {
        Some(e) => e,
        None if episodes_from_file => cfg.episodes,
        None => default_episodes(cfg.domain),
    };
    if args.runs.is_some() || args.seed.is_some() {
        let first = args.seed.unwrap_or_else(|| cfg.seeds.first().copied().unwrap_or(0));
        cfg.seeds = seeds_from(first, args.runs.unwrap_or(cfg.seeds.len()));
    }
    cfg.output = args.out.clone();
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<(), CliError> {
    let cfg = experiment(&args)?;
    let runs = run_experiment(&cfg)?;
    let summary = aggregate(&runs)?;
    let window = args.window.clamp(1, cfg.episodes.max(1));
    let no_plan: usize = summary.no_plan_runs.iter().sum();
    println!(
        "{} {} scenario={} noise={} episodes={} runs={}",
        cfg.domain,
        cfg.agent,
        cfg.scenario,
        cfg.noise,
        cfg.episodes,
        cfg.runs()
    );
    if cfg.episodes > 0 {
        let tail = cfg.episodes - window..cfg.episodes;
        println!("mean return over all episodes: {:.3}", mean_return(&runs, 0..cfg.episodes));
        println!("mean return over the last {window}: {:.3}", mean_return(&runs, tail));
    }
    println!("episodes without a plan: {no_plan}");
    if let Some(dir) = &cfg.output {
        export(&cfg, &runs, &summary, dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn plan(args: PlanArgs) -> Result<(), CliError> {
    let desc = parse_domain(&read(&args.domain)?).map_err(|e| located(&args.domain, e))?;
    let query = parse_query(&read(&args.query)?, &desc).map_err(|e| located(&args.query, e))?;
    let ts = TransitionSystem::ground(&desc).map_err(|e| located(&args.domain, e))?;
    let problem = Problem::from_query(&ts, &query).map_err(|e| located(&args.query, e))?;
    let cfg = PlannerConfig {
        maxstamp: args.maxstamp,
        samples_per_state: args.samples_per_state,
        seed: args.seed.unwrap_or(0),
        max_plan_actions: None,
    };
    if cfg.maxstamp == 0 {
        return Err(CliError::Config("maxstamp must be at least 1".into()));
    }
    let result = match args.seed {
        None => solve(&problem, &ts, &mut FullAvailability, &cfg),
        Some(seed) => {
            let n = ts.action_count();
            let uniform = |_| vec![1.0 / n as f64; n];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            solve_with_policy(&problem, &ts, &uniform, &cfg, &mut rng)
        }
    }
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    match result {
        Some(p) => {
            print!("{}", p.to_text(&ts));
            eprintln!("{} actions, horizon {}", p.action_count(), p.horizon);
        }
        None => eprintln!("no plan within maxstamp {}", cfg.maxstamp),
    }
    Ok(())
}

fn serve(args: ServeArgs) -> Result<(), CliError> {
    if args.replay == 0 {
        return Err(CliError::Config("replay must be at least 1".into()));
    }
    let ip = if args.public { Ipv4Addr::UNSPECIFIED } else { Ipv4Addr::LOCALHOST };
    let addr = SocketAddr::from((ip, args.port));
    let config = ServiceConfig {
        replay_capacity: args.replay,
        log_dir: args.log_dir,
    };
    if let Some(dir) = &config.log_dir {
        fs::create_dir_all(dir).map_err(|e| located(dir, e))?;
    }
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Runtime(e.to_string()))?;
    eprintln!("listening on {addr}");
    rt.block_on(pacman_teach::serve(addr, config))
        .map_err(|e| CliError::Runtime(format!("{addr}: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Plan(a) => plan(a),
        Command::Serve(a) => serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
