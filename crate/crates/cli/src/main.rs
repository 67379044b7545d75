//! `lockctl`: explore, check, monitor, simulate, serve and inspect traces.
//!
//! Exit codes: 0 all requested checks pass, 1 a check failed, 2 usage error,
//! 3 missing file, 4 invalid config or input file, 5 state ceiling or limit
//! exceeded.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand};
use lockctl_core::checker::{verify, ExploreError, ExploreMode, StateGraph};
use lockctl_core::config::{Config, ConfigError};
use lockctl_core::monitor::{catalog, CheckKind, Requirement, TraceMonitor};
use lockctl_core::sim::{monitor_for, Recorder, Scenario, Session};
use lockctl_core::trace::{number, read_trace, write_trace, TraceError, TraceEvent};
use lockctl_core::{Alphabet, Controller, Mutation};

#[derive(Parser)]
#[command(
    name = "lockctl",
    version,
    about = "Lock-complex controller: model checking, monitoring and simulation"
)]
struct Cli {
    /// `full`, `reduced`, `reduced1` or a TOML file. Defaults to `reduced`
    /// for explore and check, `full` otherwise.
    #[arg(long, global = true)]
    config: Option<String>,
    /// Use a deliberately broken controller.
    #[arg(long, global = true)]
    mutation: Option<Mutation>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Explore the state graph and print its statistics.
    Explore {
        /// Only states within this many edges of the initial state.
        #[arg(long, conflicts_with = "walk")]
        depth: Option<u32>,
        /// One random walk of this many edges.
        #[arg(long)]
        walk: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        parallel: bool,
    },
    /// Check requirements exhaustively; counterexamples go to files.
    Check {
        #[arg(long, default_value = "all")]
        req: String,
        /// Directory for counterexample traces.
        #[arg(long, default_value = "counterexamples")]
        out: PathBuf,
        #[arg(long)]
        parallel: bool,
    },
    /// Run trace monitors over a trace file.
    Monitor {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "all")]
        req: String,
    },
    /// Run the controller against the simulated plant.
    Simulate {
        /// Scenario to replay; otherwise a random operator drives the plant.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Ticks to run; default the scenario's end, or 10000.
        #[arg(long)]
        steps: Option<u64>,
        /// Plant seed; overrides the scenario's.
        #[arg(long)]
        seed: Option<u64>,
        /// Per-tick probability of a random console command.
        #[arg(long)]
        operator: Option<f64>,
        #[arg(long, default_value = "all")]
        req: String,
        /// Write the trace here.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Write a replayable scenario of the run here.
        #[arg(long)]
        scenario_out: Option<PathBuf>,
    },
    /// Run the WebSocket session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
        #[arg(long, default_value = "all")]
        req: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Record each session's trace and scenario here.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Pretty-print and validate a trace file.
    Trace {
        file: PathBuf,
        /// Also check the trace is a run of the controller.
        #[arg(long)]
        conform: bool,
        /// Only validate, print nothing but the verdict.
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

const CHECK_FAILED: u8 = 1;
const USAGE: u8 = 2;
const MISSING: u8 = 3;
const INVALID: u8 = 4;
const CEILING: u8 = 5;

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match e {
            ConfigError::Missing { .. } => MISSING,
            ConfigError::Invalid(_) => INVALID,
        };
        fail(code, e.to_string())
    }
}

impl From<ExploreError> for Failure {
    fn from(e: ExploreError) -> Self {
        fail(CEILING, e.to_string())
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    let code = if e.kind() == io::ErrorKind::NotFound {
        MISSING
    } else {
        INVALID
    };
    fail(code, format!("{}: {e}", path.display()))
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| io_failure(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| fail(INVALID, format!("{}: {e}", path.display())))
}

fn load_trace(path: &Path) -> Result<Vec<TraceEvent>, Failure> {
    read_trace(open(path)?).map_err(|e| match e {
        TraceError::Io(e) => io_failure(path, e),
        e => fail(INVALID, format!("{}: {e}", path.display())),
    })
}

fn select(req: &str) -> Result<Vec<&'static Requirement>, Failure> {
    catalog::select(req).map_err(|e| fail(USAGE, format!("--req: {e}")))
}

fn controller(config: &Config, mutation: Option<Mutation>) -> Controller {
    match mutation {
        Some(m) => Controller::with_mutation(&config.plant, m),
        None => Controller::new(&config.plant),
    }
}

fn out_line(out: &mut impl Write, line: std::fmt::Arguments) -> Result<(), Failure> {
    out.write_fmt(line)
        .and_then(|()| out.write_all(b"\n"))
        .map_err(|e| fail(INVALID, format!("stdout: {e}")))
}

macro_rules! say {
    ($out:expr, $($arg:tt)*) => { out_line($out, format_args!($($arg)*))? };
}

fn run(cli: Cli, out: &mut impl Write) -> Result<(), Failure> {
    let default_config = match cli.command {
        Command::Explore { .. } | Command::Check { .. } => "reduced",
        _ => "full",
    };
    let config = Config::resolve(cli.config.as_deref().unwrap_or(default_config))?;
    match cli.command {
        Command::Explore {
            depth,
            walk,
            seed,
            parallel,
        } => {
            let mode = match (depth, walk) {
                (Some(d), _) => ExploreMode::Bounded(d),
                (None, Some(steps)) => ExploreMode::Random { steps, seed },
                (None, None) => ExploreMode::Exhaustive,
            };
            let g = StateGraph::explore(&controller(&config, cli.mutation), mode, &config.limits, parallel)?;
            say!(out, "config {}: {}", config.name, config.plant.summary());
            say!(out, "{}", g.stats().summary());
            say!(
                out,
                "exhaustive={} memory={}MiB time={:.2}s",
                g.is_exhaustive(),
                g.memory_estimate() >> 20,
                g.stats().wall_time.as_secs_f64()
            );
            Ok(())
        }
        Command::Check {
            req,
            out: dir,
            parallel,
        } => {
            let reqs = select(&req)?;
            let started = Instant::now();
            let g = StateGraph::explore(
                &controller(&config, cli.mutation),
                ExploreMode::Exhaustive,
                &config.limits,
                parallel,
            )?;
            say!(out, "config {}: {}", config.name, g.stats().summary());
            let mut failed = 0;
            for r in reqs.iter().copied() {
                let v = verify(&g, r).map_err(|e| fail(INVALID, format!("{}: {e}", r.id)))?;
                let line = v.report_line();
                match &v.path {
                    Some(path) if !v.holds => {
                        failed += 1;
                        std::fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
                        let file = dir.join(format!("{}.trace", r.id));
                        let mut w = create(&file)?;
                        write_trace(&mut w, &number(path.iter().copied()))
                            .and_then(|()| w.flush())
                            .map_err(|e| io_failure(&file, e))?;
                        say!(out, "{line} {}", file.display());
                    }
                    _ => {
                        failed += usize::from(!v.holds);
                        say!(out, "{line}");
                    }
                }
            }
            say!(
                out,
                "{} ok, {failed} violated, {:.1}s",
                reqs.len() - failed,
                started.elapsed().as_secs_f64()
            );
            if failed > 0 {
                return Err(fail(CHECK_FAILED, format!("{failed} requirements violated")));
            }
            Ok(())
        }
        Command::Monitor { trace, req } => {
            let reqs = select(&req)?;
            let events = load_trace(&trace)?;
            let monitored: Vec<_> = reqs
                .iter()
                .copied()
                .filter(|r| r.kind != CheckKind::GraphLiveness)
                .collect();
            let mut m = TraceMonitor::new(&monitored, &Alphabet::new(&config.plant))
                .map_err(|e| fail(INVALID, e.to_string()))?;
            for e in &events {
                if !e.action.fits(&config.plant) {
                    return Err(fail(
                        INVALID,
                        format!("{}: `{}` is outside the configuration", trace.display(), e.action),
                    ));
                }
                m.observe(&e.action, e.seq);
            }
            let report = m.report(true);
            report_and_verdict(out, &report, reqs.len() - monitored.len(), events.len())
        }
        Command::Simulate {
            scenario,
            steps,
            seed,
            operator,
            req,
            trace_out,
            scenario_out,
        } => {
            let reqs = select(&req)?;
            let mut sc = match &scenario {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
                    text.parse::<Scenario>()
                        .map_err(|e| fail(INVALID, format!("{}: {e}", path.display())))?
                }
                None => {
                    let mut sc = Scenario::new(0);
                    sc.profile = config.faults;
                    sc.operator_rate = 0.2;
                    sc.end = Some(10_000);
                    sc
                }
            };
            if let Some(s) = seed {
                sc.seed = s;
            }
            if let Some(r) = operator {
                if !(0.0..=1.0).contains(&r) {
                    return Err(fail(USAGE, "--operator must be within [0, 1]"));
                }
                sc.operator_rate = r;
            }
            let mut session = Session::for_scenario(controller(&config, cli.mutation), &sc)
                .map_err(|e| fail(INVALID, e.to_string()))?;
            let monitor = monitor_for(&config.plant, &reqs).map_err(|e| fail(INVALID, e.to_string()))?;
            session.attach_monitor(monitor);
            let recording = trace_out.is_some() || scenario_out.is_some();
            if recording {
                let sink = |p: &Option<PathBuf>| -> Result<Box<dyn Write + Send>, Failure> {
                    Ok(match p {
                        Some(p) => Box::new(create(p)?),
                        None => Box::new(io::sink()),
                    })
                };
                session
                    .record(Recorder::new(sink(&trace_out)?, sink(&scenario_out)?))
                    .map_err(|e| fail(INVALID, e.to_string()))?;
            }
            session.run_scenario(&sc, steps).map_err(|e| {
                fail(
                    INVALID,
                    format!("simulation stopped at tick {}: {e}", session.tick_count()),
                )
            })?;
            if recording {
                session.finish_recording().map_err(|e| fail(INVALID, e.to_string()))?;
                if let Some(e) = session.take_record_error() {
                    return Err(fail(INVALID, format!("recording failed: {e}")));
                }
            }
            let report = session.report(true).expect("monitor attached");
            let skipped = reqs.iter().filter(|r| r.kind == CheckKind::GraphLiveness).count();
            let verdict = report_and_verdict(out, &report, skipped, session.stats().events as usize);
            say!(out, "stats {}", session.stats());
            verdict
        }
        Command::Serve {
            addr,
            req,
            seed,
            record,
        } => {
            select(&req)?;
            let mut cfg = lockctl_service::ServiceConfig::new(config);
            cfg.requirements = req;
            cfg.seed = seed;
            cfg.record_dir = record;
            cfg.mutation = cli.mutation;
            let rt = tokio::runtime::Runtime::new().map_err(|e| fail(INVALID, e.to_string()))?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr)
                    .await
                    .map_err(|e| fail(USAGE, format!("cannot listen on {addr}: {e}")))?;
                tracing::info!(
                    "listening on ws://{}/ws",
                    listener.local_addr().map_err(|e| fail(USAGE, e.to_string()))?
                );
                lockctl_service::serve(listener, Arc::new(cfg))
                    .await
                    .map_err(|e| fail(INVALID, e.to_string()))
            })
        }
        Command::Trace { file, conform, quiet } => {
            let events = load_trace(&file)?;
            if !quiet {
                for e in &events {
                    say!(out, "{:>8}  {:<6}  {}", e.seq, e.kind.as_str(), e.action);
                }
            }
            if let Some(gap) = events.windows(2).find(|w| w[1].seq != w[0].seq + 1) {
                say!(out, "note: sequence jumps from {} to {}", gap[0].seq, gap[1].seq);
            }
            if conform {
                let c = controller(&config, cli.mutation);
                let mut state = c.initial_state();
                for e in &events {
                    state = c
                        .step(&state, &e.action)
                        .map_err(|err| fail(CHECK_FAILED, format!("event {}: {err}", e.seq)))?;
                }
                let end = if state.is_stable() { "stable" } else { "inside a burst" };
                say!(out, "{} events, a run of the controller, ends {end}", events.len());
            } else {
                say!(out, "{} events, well formed", events.len());
            }
            Ok(())
        }
    }
}

fn report_and_verdict(
    out: &mut impl Write,
    report: &lockctl_core::monitor::Report,
    skipped: usize,
    events: usize,
) -> Result<(), Failure> {
    for line in &report.0 {
        say!(out, "{line}");
    }
    let violated = report.violated().count();
    let mut summary = format!(
        "{} ok, {violated} violated over {events} events",
        report.0.len() - violated
    );
    if skipped > 0 {
        summary.push_str(&format!(", {skipped} graph-only requirements skipped"));
    }
    say!(out, "{summary}");
    if violated > 0 {
        return Err(fail(CHECK_FAILED, format!("{violated} requirements violated")));
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt().with_writer(io::stderr).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match run(cli, &mut out) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = out.flush();
            eprintln!("lockctl: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
