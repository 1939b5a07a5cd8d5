//! Command-line front end. Exit codes: 0 success, 1 invalid input,
//! 2 I/O failure.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use lamp_bench::{run_scenario, write_csv, BenchError, BenchOptions, CsvMeta, Preset, Scenario};
use lamp_core::policy::PolicyId;
use lamp_core::taxonomy::SemanticTaxonomy;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::config::{ConfigError, EngineConfig};
use crate::engine::{parse_face_record, parse_manifest, Engine, EngineError, ErrorKind};

#[derive(Debug, Parser)]
#[command(name = "lamp", version, about = "Location-aware multi-party photo privacy engine")]
pub struct Cli {
    /// Engine configuration (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Data directory; overrides the config file and LAMP_DATA_DIR.
    #[arg(long, global = true, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Manage location policies.
    #[command(subcommand)]
    Policy(PolicyCommand),
    /// Enroll faces from a file of `{user, vector}` records ("-" for stdin).
    Enroll { file: PathBuf },
    /// Check a photo manifest and print the redaction decisions.
    Check {
        manifest: PathBuf,
        /// Also hand the decisions to the redactor and print its report.
        #[arg(long)]
        enforce: bool,
    },
    /// Run a benchmark scenario and write CSV.
    Bench(BenchArgs),
    /// Manage the semantic-location taxonomy.
    #[command(subcommand)]
    Taxonomy(TaxonomyCommand),
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
    },
}

#[derive(Debug, Subcommand)]
pub enum PolicyCommand {
    /// Add policies from a file holding one or more JSON policies ("-" for stdin).
    Add { file: PathBuf },
    /// Remove a policy by id (`7` or `P7`).
    Rm { pid: String },
    /// List stored policies.
    List {
        #[arg(long)]
        owner: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum TaxonomyCommand {
    /// Replace the taxonomy with a JSON file of `[keyword, parent]` rows.
    Load { file: PathBuf },
    /// Print the current taxonomy.
    Show,
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    /// users, locations, keywords, polloc or faces.
    pub scenario: String,
    /// Smallest x-axis value; defaults to the preset's.
    #[arg(long)]
    pub min: Option<usize>,
    /// Largest x-axis value; defaults to the preset's.
    #[arg(long)]
    pub max: Option<usize>,
    /// Number of x-axis points between --min and --max.
    #[arg(long, default_value_t = 5)]
    pub points: usize,
    #[arg(long, default_value_t = 2019)]
    pub seed: u64,
    #[arg(long, default_value = "desk")]
    pub preset: String,
    /// CSV destination; stdout if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Timed probes per point.
    #[arg(long, default_value_t = 100)]
    pub probes: usize,
    #[arg(long, default_value_t = 10)]
    pub warmup: usize,
    /// Matching threads for `faces`; 0 means one per CPU.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Engine(e.into())
    }
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Engine(e) => e.code(),
            CliError::Bench(BenchError::Workload(_)) => "InfeasibleSpec",
            CliError::Bench(_) => "BenchFailed",
            CliError::Io { .. } => "IoError",
            CliError::Usage(_) => "Usage",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Engine(e) if e.kind() == ErrorKind::Io => 2,
            CliError::Io { .. } => 2,
            _ => 1,
        }
    }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    let res = if path == Path::new("-") {
        std::io::stdin().read_to_string(&mut text).map(|_| ())
    } else {
        std::fs::File::open(path).and_then(|mut f| f.read_to_string(&mut text)).map(|_| ())
    };
    res.map_err(|source| CliError::Io { path: path.to_owned(), source })?;
    Ok(text)
}

/// Split a file into JSON documents: a single object, an array of
/// objects, or one object per line.
fn documents(text: &str, code: &'static str) -> Result<Vec<String>, CliError> {
    let mut docs = Vec::new();
    for v in serde_json::Deserializer::from_str(text).into_iter::<Value>() {
        let v = v.map_err(|e| EngineError::Malformed { code, message: e.to_string() })?;
        match v {
            Value::Array(items) => docs.extend(items.iter().map(Value::to_string)),
            other => docs.push(other.to_string()),
        }
    }
    Ok(docs)
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    writeln!(out, "{text}").map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
}

fn parse_pid(s: &str) -> Result<PolicyId, CliError> {
    s.strip_prefix(['P', 'p'])
        .unwrap_or(s)
        .parse()
        .map(PolicyId)
        .map_err(|_| EngineError::Malformed { code: "MalformedPolicyId", message: format!("bad policy id {s:?}") }.into())
}

fn engine_config(cli: &Cli) -> Result<EngineConfig, CliError> {
    let mut config = EngineConfig::load(cli.config.as_deref())?;
    if let Some(dir) = &cli.data_dir {
        config.data_dir = dir.clone();
    }
    Ok(config)
}

fn bench_xs(args: &BenchArgs) -> Result<Option<Vec<usize>>, CliError> {
    if args.min.is_none() && args.max.is_none() {
        return Ok(None);
    }
    let scenario: Scenario = args.scenario.parse()?;
    let preset: Preset = args.preset.parse()?;
    let default = lamp_bench::plan(scenario, preset, args.seed).xs;
    let lo = args.min.unwrap_or(default[0]);
    let hi = args.max.unwrap_or(*default.last().expect("plans have points"));
    if lo == 0 || lo > hi {
        return Err(CliError::Usage(format!("need 0 < --min <= --max, got {lo} and {hi}")));
    }
    let n = args.points.max(1);
    if n == 1 || lo == hi {
        return Ok(Some(vec![lo]));
    }
    let mut xs: Vec<usize> = (0..n).map(|i| lo + (hi - lo) * i / (n - 1)).collect();
    xs.dedup();
    Ok(Some(xs))
}

fn bench(args: &BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let scenario: Scenario = args.scenario.parse()?;
    let preset: Preset = args.preset.parse()?;
    let opts = BenchOptions {
        seed: args.seed,
        probes: args.probes,
        warmup: args.warmup,
        workers: args.workers,
        xs: bench_xs(args)?,
        ..BenchOptions::default()
    };
    let results = run_scenario(scenario, preset, &opts)?;
    let workers = match args.workers {
        0 => std::thread::available_parallelism().map_or(1, usize::from),
        n => n,
    };
    let meta = CsvMeta { seed: args.seed, preset: preset.name().to_owned(), workers };
    match &args.out {
        Some(path) => {
            let file = std::fs::File::create(path).map_err(|source| CliError::Io { path: path.clone(), source })?;
            write_csv(std::io::BufWriter::new(file), &meta, &results).map_err(|source| CliError::Io { path: path.clone(), source })
        }
        None => write_csv(out, &meta, &results).map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source }),
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    if let Command::Bench(args) = &cli.command {
        return bench(args, out);
    }
    let engine = Engine::open(engine_config(cli)?)?;
    match &cli.command {
        Command::Policy(PolicyCommand::Add { file }) => {
            let mut added = Vec::new();
            for doc in documents(&read_input(file)?, "MalformedPolicy")? {
                added.push(engine.add_policy_json(&doc)?);
            }
            print_json(out, &serde_json::json!({ "added": added }))
        }
        Command::Policy(PolicyCommand::Rm { pid }) => {
            let removed = engine.remove_policy(parse_pid(pid)?)?;
            print_json(out, &serde_json::json!({ "removed": removed.pid }))
        }
        Command::Policy(PolicyCommand::List { owner }) => print_json(out, &engine.policies(owner.as_deref())),
        Command::Enroll { file } => {
            let mut users = Vec::new();
            for doc in documents(&read_input(file)?, "MalformedFaceRecord")? {
                let record = parse_face_record(&doc)?;
                users.push(record.user.clone());
                engine.enroll(record)?;
            }
            print_json(out, &serde_json::json!({ "enrolled": users }))
        }
        Command::Check { manifest, enforce } => {
            let m = parse_manifest(&read_input(manifest)?)?;
            if *enforce {
                print_json(out, &engine.enforce(&m)?)
            } else {
                print_json(out, &engine.check(&m)?)
            }
        }
        Command::Taxonomy(TaxonomyCommand::Load { file }) => {
            let taxonomy = SemanticTaxonomy::from_json(&read_input(file)?).map_err(EngineError::from)?;
            let n = taxonomy.len();
            engine.load_taxonomy(taxonomy)?;
            print_json(out, &serde_json::json!({ "keywords": n }))
        }
        Command::Taxonomy(TaxonomyCommand::Show) => print_json(out, &engine.taxonomy().to_rows()),
        Command::Serve { listen } => {
            let runtime = tokio::runtime::Runtime::new().map_err(|source| CliError::Io { path: PathBuf::from("<runtime>"), source })?;
            runtime
                .block_on(crate::service::serve(Arc::new(engine), *listen))
                .map_err(|source| CliError::Io { path: PathBuf::from(listen.to_string()), source })
        }
        Command::Bench(_) => unreachable!("handled above"),
    }
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            let code = match e.kind() {
                K::DisplayHelp | K::DisplayVersion | K::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", e.code());
            e.exit_code()
        }
    }
}
