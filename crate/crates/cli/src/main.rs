use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pursuit_core::engine::{replay, sweep, write_episode, ReplayReport, Scenario};
use pursuit_core::variety::{variety_audit, VarietyTable};
use pursuit_core::Error as CoreError;
use pursuit_service::{ServeConfig, ServiceError, DEFAULT_PORT};

/// Leader/follower pursuit simulator.
///
/// Every flag can also be set through an environment variable with the
/// `PURSUIT_` prefix, e.g. `PURSUIT_SCENARIO`, `PURSUIT_REPEATS`.
#[derive(Debug, Parser)]
#[command(name = "pursuit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one episode, print its summary and write the JSONL log.
    Run(RunArgs),
    /// Run a scenario at several follower distances and write a CSV table.
    Sweep(SweepArgs),
    /// Recompute a log tick by tick and report the first divergence.
    Replay(ReplayArgs),
    /// Check a disturbance/response table for requisite variety.
    Audit(AuditArgs),
    /// Start the live WebSocket session.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, env = "PURSUIT_SCENARIO")]
    scenario: PathBuf,
    /// Log destination; defaults to the scenario file name with a .jsonl extension.
    #[arg(long, env = "PURSUIT_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, env = "PURSUIT_SCENARIO")]
    scenario: PathBuf,
    /// Comma separated follower start distances in metres.
    #[arg(long, env = "PURSUIT_DISTANCES", value_delimiter = ',', required = true)]
    distances: Vec<f64>,
    #[arg(long, env = "PURSUIT_REPEATS", default_value_t = 10)]
    repeats: usize,
    /// CSV destination; stdout when omitted.
    #[arg(long, env = "PURSUIT_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    /// Log file to check.
    #[arg(env = "PURSUIT_LOG")]
    log: PathBuf,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long, env = "PURSUIT_SCENARIO")]
    scenario: PathBuf,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Preset name or scenario file; the leader must be human driven.
    #[arg(long, env = "PURSUIT_SCENARIO", default_value = "human_leader")]
    scenario: String,
    #[arg(long, env = "PURSUIT_PORT", default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Wall seconds per simulated second; 0 runs unthrottled.
    #[arg(long, env = "PURSUIT_REALTIME", default_value_t = 1.0)]
    realtime: f64,
}

#[derive(Debug)]
enum Failure {
    /// Bad input: scenario, table, log contents, flag values.
    Invalid(String),
    Io(String),
}

impl Failure {
    fn io(path: &Path, e: std::io::Error) -> Failure {
        Failure::Io(format!("{}: {e}", path.display()))
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Failure {
        match e {
            CoreError::Io(m) => Failure::Io(m),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<ServiceError> for Failure {
    fn from(e: ServiceError) -> Failure {
        match e {
            ServiceError::Io(m) => Failure::Io(m),
            ServiceError::Core(c) => c.into(),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn load_scenario(path: &Path) -> Result<Scenario, Failure> {
    Scenario::from_toml(&read(path)?).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path).map(BufWriter::new).map_err(|e| Failure::io(path, e))
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let scenario = load_scenario(&args.scenario)?;
    let out = args.out.unwrap_or_else(|| args.scenario.with_extension("jsonl"));
    let result = write_episode(&scenario, create(&out)?)?;
    println!("{}", result.summary());
    eprintln!("log written to {}", out.display());
    Ok(())
}

fn run_sweep(args: SweepArgs) -> Result<(), Failure> {
    if args.repeats == 0 {
        return Err(Failure::Invalid("--repeats must be at least 1".into()));
    }
    let template = load_scenario(&args.scenario)?;
    let csv = sweep(&template, &args.distances, args.repeats)?.to_csv();
    match args.out {
        Some(path) => {
            let mut w = create(&path)?;
            w.write_all(csv.as_bytes())
                .and_then(|_| w.flush())
                .map_err(|e| Failure::io(&path, e))?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn run_replay(args: ReplayArgs) -> Result<(), Failure> {
    let file = File::open(&args.log).map_err(|e| Failure::io(&args.log, e))?;
    let report = replay(BufReader::new(file))?;
    println!("{report}");
    match report {
        ReplayReport::Ok { .. } => Ok(()),
        ReplayReport::Diverged { .. } => Err(Failure::Invalid("log does not match recomputation".into())),
    }
}

fn run_audit(args: AuditArgs) -> Result<(), Failure> {
    let table = VarietyTable::from_toml(&read(&args.scenario)?)
        .map_err(|e| Failure::Invalid(format!("{}: {e}", args.scenario.display())))?;
    println!("{}", variety_audit(&table)?.summary());
    Ok(())
}

fn run_serve(args: ServeArgs) -> Result<(), Failure> {
    let path = Path::new(&args.scenario);
    let config = if path.is_file() {
        ServeConfig {
            scenario: path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            scenario_file: Some(load_scenario(path)?),
            port: args.port,
            realtime_factor: args.realtime,
            ..ServeConfig::default()
        }
    } else {
        ServeConfig {
            scenario: args.scenario,
            port: args.port,
            realtime_factor: args.realtime,
            ..ServeConfig::default()
        }
    };
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
    runtime.block_on(pursuit_service::serve(config))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(a) => run(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Replay(a) => run_replay(a),
        Command::Audit(a) => run_audit(a),
        Command::Serve(a) => run_serve(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
