use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use shoal_core::afsa::history_csv;
use shoal_core::config::{Mode, SessionConfig};
use shoal_core::control::{replay, wire, Command, CommandLog, Session, SessionId};
use shoal_core::dispatcher::{self, FieldSet, KeywordMode};
use shoal_core::gridsim::{self, GridSim, ResourceId, StatsReport};
use shoal_core::scheduling::{brute_force_optimum, BRUTE_FORCE_LIMIT};

#[derive(Parser)]
#[command(name = "shoal", version, about = "Fish-swarm grid scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a session config and summarize it.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Compute task coordinates for every item in a folder.
    Dispatch {
        #[arg(long)]
        fields: PathBuf,
        #[arg(long)]
        items: PathBuf,
        /// Write coordinates.csv here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Reject keywords missing from the item's field (default).
        #[arg(long, conflicts_with = "lenient")]
        strict: bool,
        /// Drop keywords missing from the item's field.
        #[arg(long)]
        lenient: bool,
    },
    /// Submit the configured jobs round-robin and run the grid to idle.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the swarm scheduler to completion and simulate its result.
    Optimize {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        mode: Option<Mode>,
        /// Also print the exhaustive optimum (small instances only).
        #[arg(long)]
        oracle: bool,
    },
    /// Serve live sessions over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory for config files named in create requests.
        #[arg(long, default_value = ".")]
        config_root: PathBuf,
        /// Command logs are written here on shutdown.
        #[arg(long, default_value = "logs")]
        out: PathBuf,
        /// Milliseconds between iterations of a running session.
        #[arg(long, default_value_t = 50)]
        tick_ms: u64,
    },
    /// Rebuild a session from an exported command log.
    Replay {
        #[arg(long)]
        log: PathBuf,
        /// Directory relative dispatcher paths resolve against.
        #[arg(long, default_value = ".")]
        config_root: PathBuf,
        /// Keep running up to this iteration after the last command.
        #[arg(long)]
        until: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

enum Failure {
    /// Bad input: config, flags, folders.
    Invalid(String),
    /// Anything that went wrong after inputs were accepted.
    Runtime(String),
}

type Outcome = Result<(), Failure>;

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SHOAL_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Validate { config, seed } => validate(&config, seed),
        Cmd::Dispatch {
            fields,
            items,
            out,
            strict: _,
            lenient,
        } => dispatch(&fields, &items, out.as_deref(), lenient),
        Cmd::Simulate { run } => simulate(&run),
        Cmd::Optimize {
            run,
            iterations,
            mode,
            oracle,
        } => optimize(&run, iterations, mode, oracle),
        Cmd::Serve {
            port,
            config_root,
            out,
            tick_ms,
        } => serve(port, config_root, out, tick_ms),
        Cmd::Replay {
            log,
            config_root,
            until,
            out,
        } => replay_log(&log, &config_root, until, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(msg)) => {
            report(&msg);
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            report(&msg);
            ExitCode::from(2)
        }
    }
}

fn report(msg: &str) {
    for line in msg.lines() {
        eprintln!("error: {line}");
    }
}

fn load_config(path: &Path) -> Result<SessionConfig, Failure> {
    SessionConfig::load(path).map_err(invalid)
}

fn base_dir(config: &Path) -> PathBuf {
    config.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
}

fn validate(path: &Path, seed: Option<u64>) -> Outcome {
    let config = load_config(path)?;
    let plan = config.validate(seed, &base_dir(path)).map_err(invalid)?;
    let jobs: usize = plan.grid.users.iter().map(|u| u.job_count).sum();
    println!(
        "ok: {} mode, seed {}, {} jobs, {} resources, {} fields, {} items",
        plan.mode.as_str(),
        plan.seed,
        jobs,
        plan.grid.resources.len(),
        plan.fields.iter().count(),
        plan.items.len()
    );
    Ok(())
}

fn dispatch(fields_root: &Path, items_root: &Path, out: Option<&Path>, lenient: bool) -> Outcome {
    let mode = if lenient {
        KeywordMode::Lenient
    } else {
        KeywordMode::Strict
    };
    let fields = FieldSet::new(dispatcher::load_fields(fields_root).map_err(invalid)?).map_err(invalid)?;
    let items = dispatcher::load_items(items_root, &fields, mode).map_err(invalid)?;
    let mut rows = Vec::with_capacity(items.len());
    for item in items {
        let c = fields.locate(&item).map_err(invalid)?;
        rows.push((item, c));
    }
    let csv = dispatcher::coordinates_csv(&rows);
    match out {
        Some(dir) => write_files(dir, &[("coordinates.csv", csv)]),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn write_files(dir: &Path, files: &[(&str, String)]) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn stats_files(report: &StatsReport) -> [(&'static str, String); 2] {
    [
        ("jobs.csv", report.jobs_csv()),
        ("resources.csv", report.resources_csv()),
    ]
}

fn simulate(run: &RunArgs) -> Outcome {
    let config = load_config(&run.config)?;
    let grid = gridsim::build_grid(&config.grid).map_err(invalid)?;
    let seed = config.effective_seed(run.seed);
    let mut sim: GridSim = grid.simulator();
    let m = grid.resources.len();
    for (i, job) in grid.gridlets(seed).into_iter().enumerate() {
        sim.submit(job, ResourceId(i % m)).map_err(runtime)?;
    }
    let report = StatsReport::new(sim.run_until_idle());
    write_files(&run.out, &stats_files(&report))?;
    println!("jobs: {}", report.jobs.len());
    println!("makespan: {:.6}", report.makespan());
    Ok(())
}

fn optimize(run: &RunArgs, iterations: Option<usize>, mode: Option<Mode>, oracle: bool) -> Outcome {
    let mut config = load_config(&run.config)?;
    if let Some(n) = iterations {
        config.swarm.iterations = n;
    }
    if let Some(m) = mode {
        config.mode = m;
    }
    let mut session =
        Session::create(SessionId("cli".into()), config, run.seed, &base_dir(&run.config)).map_err(invalid)?;

    let optimum = match (oracle, session.optimizer()) {
        (false, _) => None,
        (true, None) => return Err(invalid("--oracle needs optimizer mode")),
        (true, Some((problem, _))) => Some(
            brute_force_optimum(problem)
                .map_err(|e| invalid(format!("{e}; --oracle is limited to {BRUTE_FORCE_LIMIT} assignments")))?,
        ),
    };

    let mut history = Vec::new();
    session.apply(Command::Start).map_err(invalid)?;
    while session.is_running() {
        session.tick();
        history.push(session.best_fitness().unwrap_or(f64::INFINITY));
    }
    let report = session.stats_report();
    let mut files = vec![("history.csv", history_csv(&history))];
    if let Some((problem, _)) = session.optimizer() {
        let assignment = session
            .snapshot()
            .best_assignment
            .ok_or_else(|| runtime("optimizer finished without a best assignment"))?;
        files.push(("assignment.csv", assignment.to_csv(problem)));
    }
    let [jobs, resources] = stats_files(&report);
    files.push(jobs);
    files.push(resources);
    write_files(&run.out, &files)?;

    if let Some(best) = session.best_fitness().filter(|_| session.optimizer().is_some()) {
        println!("estimated makespan: {best:.6}");
    }
    println!("simulated makespan: {:.6}", report.makespan());
    if let Some((_, best)) = optimum {
        println!("optimal makespan: {best:.6}");
    }
    Ok(())
}

fn serve(port: u16, config_root: PathBuf, log_dir: PathBuf, tick_ms: u64) -> Outcome {
    if !config_root.is_dir() {
        return Err(invalid(format!(
            "config root {} is not a directory",
            config_root.display()
        )));
    }
    let rt = tokio::runtime::Runtime::new().map_err(runtime)?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(("127.0.0.1", port))
            .await
            .map_err(|e| runtime(format!("cannot listen on port {port}: {e}")))?;
        let addr = listener.local_addr().map_err(runtime)?;
        println!("listening on http://{addr}");
        let state = shoal_server::AppState::new(shoal_server::ServerConfig {
            config_root,
            log_dir: Some(log_dir),
            tick_interval: std::time::Duration::from_millis(tick_ms.max(1)),
        });
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("interrupt received, shutting down");
        };
        shoal_server::serve(listener, state, shutdown).await.map_err(runtime)
    })
}

fn replay_log(path: &Path, root: &Path, until: Option<u64>, out: &Path) -> Outcome {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let log: CommandLog = wire::decode(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let session = replay(&log, root, until).map_err(invalid)?;
    let mut snapshot = session.snapshot();
    snapshot.session = SessionId("replay".into());
    let report = session.stats_report();
    let [jobs, resources] = stats_files(&report);
    write_files(
        out,
        &[
            ("snapshot.json", wire::encode_pretty(&snapshot) + "\n"),
            jobs,
            resources,
        ],
    )?;
    println!("iteration: {}", session.iteration());
    println!("jobs completed: {}", report.jobs.len());
    Ok(())
}
