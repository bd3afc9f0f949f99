use std::io::{self, BufReader, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};

use solsent::classify::{self, BaselineModel};
use solsent::report::{self, BackendConfig, ConfigOverrides, ReportError, RunConfig};
use solsent::stats::RobustFlavor;

#[derive(Parser)]
#[command(
    name = "solsent",
    version,
    about = "State-level solar sentiment pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run filter, geolocation, scoring, aggregation and analysis end to end.
    Pipeline(PipelineArgs),
    /// Fit the bag-of-words baseline on an annotations file.
    TrainBaseline(TrainArgs),
    /// Score the held-out split through any backend and report metrics.
    EvalBackend(EvalArgs),
    /// Compute RPS and net-metering scores from a policy table.
    Index {
        #[arg(long)]
        policy: PathBuf,
        /// Write CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Regress one CSV column on others with robust standard errors.
    Stats {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        y: String,
        /// Predictor columns, comma separated or repeated.
        #[arg(long = "x", required = true, value_delimiter = ',')]
        x: Vec<String>,
        #[arg(long, value_parser = parse_flavor, default_value = "hc1")]
        robust: RobustFlavor,
    },
    /// Serve a baseline model over the scorer protocol (stdio or TCP).
    ServeBaseline {
        #[arg(long)]
        model: PathBuf,
        /// `host:port` to listen on; stdin/stdout when absent.
        #[arg(long)]
        listen: Option<String>,
    },
}

#[derive(Args)]
struct BackendArgs {
    /// Baseline model file.
    #[arg(long, conflicts_with_all = ["backend_command", "backend_address"])]
    model: Option<PathBuf>,
    /// External scorer command line, e.g. "python3 serve.py".
    #[arg(long, conflicts_with = "backend_address")]
    backend_command: Option<String>,
    /// External scorer at host:port.
    #[arg(long)]
    backend_address: Option<String>,
    #[arg(long)]
    timeout_secs: Option<u64>,
    #[arg(long)]
    batch_size: Option<usize>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    keywords: Option<PathBuf>,
    #[arg(long)]
    stopphrases: Option<PathBuf>,
    #[arg(long)]
    gazetteer: Option<PathBuf>,
    #[arg(long)]
    population: Option<PathBuf>,
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Exclusion window as START..END (inclusive UTC days).
    #[arg(long, value_parser = parse_range, conflicts_with = "no_exclude")]
    exclude: Option<(NaiveDate, NaiveDate)>,
    #[arg(long)]
    no_exclude: bool,
    #[arg(long, value_parser = parse_flavor)]
    robust: Option<RobustFlavor>,
    #[command(flatten)]
    backend: BackendArgs,
}

#[derive(Args)]
struct TrainArgs {
    /// Take annotations and seed from a run config.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    model_out: PathBuf,
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    backend: BackendArgs,
}

fn parse_flavor(s: &str) -> Result<RobustFlavor, String> {
    match s.to_ascii_lowercase().as_str() {
        "hc0" => Ok(RobustFlavor::Hc0),
        "hc1" => Ok(RobustFlavor::Hc1),
        _ => Err(format!("expected hc0 or hc1, got '{s}'")),
    }
}

fn parse_range(s: &str) -> Result<(NaiveDate, NaiveDate), String> {
    let (a, b) = s.split_once("..").ok_or("expected START..END")?;
    let day = |x: &str| {
        x.trim()
            .parse::<NaiveDate>()
            .map_err(|e| format!("'{x}': {e}"))
    };
    Ok((day(a)?, day(b)?))
}

impl BackendArgs {
    fn overrides(&self, o: &mut ConfigOverrides) {
        o.model = self.model.clone();
        o.backend_command = self
            .backend_command
            .as_ref()
            .map(|c| c.split_whitespace().map(String::from).collect());
        o.backend_address = self.backend_address.clone();
        o.backend_timeout_secs = self.timeout_secs;
        o.batch_size = self.batch_size;
    }
}

/// Settings shared by train/eval when no full run config is given.
struct Partial {
    annotations: Option<PathBuf>,
    seed: u64,
    backend: BackendConfig,
    timeout: u64,
    batch_size: usize,
}

fn partial(config: Option<&PathBuf>, o: ConfigOverrides) -> Result<Partial, ReportError> {
    match config {
        Some(path) => {
            let mut cfg = RunConfig::load(path)?;
            cfg.apply(o);
            Ok(Partial {
                annotations: cfg.annotations,
                seed: cfg.seed,
                backend: cfg.backend,
                timeout: cfg.backend_timeout_secs,
                batch_size: cfg.batch_size,
            })
        }
        None => {
            let backend = if let Some(m) = o.model {
                BackendConfig::Baseline { model: Some(m) }
            } else if let Some(c) = o.backend_command {
                BackendConfig::Command { command: c }
            } else if let Some(a) = o.backend_address {
                BackendConfig::Tcp { address: a }
            } else {
                BackendConfig::Baseline { model: None }
            };
            Ok(Partial {
                annotations: o.annotations,
                seed: o.seed.unwrap_or(0),
                backend,
                timeout: o.backend_timeout_secs.unwrap_or(60),
                batch_size: o.batch_size.unwrap_or(256),
            })
        }
    }
}

fn print_json(value: &impl serde::Serialize) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn run(command: Command) -> Result<(), ReportError> {
    match command {
        Command::Pipeline(a) => {
            let mut cfg = RunConfig::load(&a.config)?;
            let mut o = ConfigOverrides {
                corpus: a.corpus,
                keywords: a.keywords,
                stopphrases: a.stopphrases,
                gazetteer: a.gazetteer,
                population: a.population,
                policy: a.policy,
                annotations: a.annotations,
                output_dir: a.output_dir,
                seed: a.seed,
                exclude: a.exclude,
                no_exclude: a.no_exclude,
                robust: a.robust,
                ..ConfigOverrides::default()
            };
            a.backend.overrides(&mut o);
            cfg.apply(o);
            let manifest = report::run_pipeline(&cfg)?;
            eprintln!(
                "wrote {} artifacts to {}",
                manifest.artifacts.len() + 1,
                cfg.output_dir.display()
            );
            Ok(())
        }
        Command::TrainBaseline(a) => {
            let o = ConfigOverrides {
                annotations: a.annotations,
                seed: a.seed,
                ..ConfigOverrides::default()
            };
            let p = partial(a.config.as_ref(), o)?;
            let ann = p
                .annotations
                .ok_or_else(|| ReportError::Config("--annotations is required".into()))?;
            let metrics =
                report::cmd_train_baseline(&ann, &a.model_out, a.metrics_out.as_deref(), p.seed)?;
            print_json(&metrics);
            Ok(())
        }
        Command::EvalBackend(a) => {
            let mut o = ConfigOverrides {
                annotations: a.annotations,
                seed: a.seed,
                ..ConfigOverrides::default()
            };
            a.backend.overrides(&mut o);
            let p = partial(a.config.as_ref(), o)?;
            let ann = p
                .annotations
                .ok_or_else(|| ReportError::Config("--annotations is required".into()))?;
            let metrics = report::cmd_eval_backend(
                &ann,
                &p.backend,
                p.seed,
                Duration::from_secs(p.timeout),
                p.batch_size,
            )?;
            print_json(&metrics);
            Ok(())
        }
        Command::Index { policy, out } => {
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path)
                        .map_err(|source| ReportError::Output { path, source })?;
                    report::cmd_index(&policy, file)?
                }
                None => report::cmd_index(&policy, io::stdout().lock())?,
            };
            Ok(())
        }
        Command::Stats { data, y, x, robust } => {
            let xs: Vec<&str> = x.iter().map(String::as_str).collect();
            print_json(&report::cmd_stats(&data, &y, &xs, robust)?);
            Ok(())
        }
        Command::ServeBaseline { model, listen } => {
            let mut model =
                BaselineModel::load(&model).map_err(|e| ReportError::Input(e.to_string()))?;
            let served = match listen {
                None => classify::serve(io::stdin().lock(), io::stdout().lock(), &mut model),
                Some(addr) => {
                    let listener = TcpListener::bind(&addr)
                        .map_err(|e| ReportError::Config(format!("{addr}: {e}")))?;
                    eprintln!(
                        "listening on {}",
                        listener.local_addr().map_err(backend_io)?
                    );
                    let (stream, _) = listener.accept().map_err(backend_io)?;
                    let reader = BufReader::new(stream.try_clone().map_err(backend_io)?);
                    classify::serve(reader, stream, &mut model)
                }
            };
            served.map(|_| ()).map_err(ReportError::Backend)
        }
    }
}

fn backend_io(e: io::Error) -> ReportError {
    ReportError::Backend(classify::ClassifyError::BackendIo(e))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(io::stderr(), "error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
