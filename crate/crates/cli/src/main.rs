//! `cavspin` command-line interface.

mod config;
mod tasks;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::json;

use config::{parse_config, Format, RunConfig, Task};
use tasks::{TaskOutput, Table};

/// Exit codes: 0 success, 1 failed check or rejected parameters,
/// 2 numerical non-convergence, 3 bad config or I/O.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(path: &str, msg: &str) -> Self {
        Self {
            code: 3,
            message: format!("config error at `{path}`: {msg}"),
        }
    }

    fn io(what: &str, e: io::Error) -> Self {
        Self {
            code: 3,
            message: format!("{what}: {e}"),
        }
    }
}

impl From<cavspin::Error> for CliError {
    fn from(e: cavspin::Error) -> Self {
        let code = match e {
            cavspin::Error::NonConvergence(_) => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Parser)]
#[command(name = "cavspin", version, about = "Cavity-array spin-model simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config file (or a previous JSON/CSV output to rerun it).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output file; standard output if omitted.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, Subcommand)]
enum Command {
    /// Check the validity conditions of the physical parameters.
    Validate,
    /// Derive the couplings and spin-model coefficients.
    MapParams,
    /// Lowest (or target) eigenstates of the spin model.
    GroundState,
    /// Time evolution of spin observables.
    Evolve,
    /// Cavity model against the spin model.
    Compare,
    /// Adiabatic preparation of the target state.
    Adiabatic,
    /// Repeat a task over values of one parameter.
    Sweep,
}

impl Command {
    fn task_name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::MapParams => "map_params",
            Command::GroundState => "ground_state",
            Command::Evolve => "evolve",
            Command::Compare => "compare",
            Command::Adiabatic => "adiabatic",
            Command::Sweep => "sweep",
        }
    }

    /// Task block used when the config has none.
    fn default_task(self) -> Option<Task> {
        match self {
            Command::Validate => Some(Task::Validate(Default::default())),
            Command::MapParams => Some(Task::MapParams(Default::default())),
            Command::GroundState => Some(Task::GroundState(Default::default())),
            Command::Compare => Some(Task::Compare(Default::default())),
            _ => None,
        }
    }
}

fn resolve(cli: &Cli) -> Result<(RunConfig, Task), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config", "a config file is required"))?;
    let text = fs::read_to_string(path).map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    let mut cfg = parse_config(&text)?;
    cfg.validate_units()?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(f) = cli.format {
        cfg.output.format = Some(match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        });
    }
    let want = cli.command.task_name();
    let task = match cfg.task.clone().or_else(|| cli.command.default_task()) {
        Some(t) if t.name() == want => t,
        Some(t) => {
            return Err(CliError::config(
                "task",
                &format!("config holds the `{}` task but `{want}` was requested", t.name()),
            ))
        }
        None => return Err(CliError::config("task", &format!("`{want}` needs a `{want}` task block"))),
    };
    cfg.task = Some(task.clone());
    Ok((cfg, task))
}

fn render_csv(cfg: &RunConfig, table: &Table) -> Result<Vec<u8>, CliError> {
    let mut out = Vec::new();
    let header = serde_json::to_string(cfg).expect("serializable");
    writeln!(out, "# config={header}").expect("in-memory write");
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| CliError {
        code: 3,
        message: format!("writing csv: {e}"),
    };
    w.write_record(&table.header).map_err(err)?;
    for row in &table.rows {
        w.write_record(row).map_err(err)?;
    }
    w.into_inner().map_err(|e| CliError {
        code: 3,
        message: format!("writing csv: {e}"),
    })
}

fn render(cfg: &RunConfig, out: &TaskOutput) -> Result<Vec<u8>, CliError> {
    match cfg.output.format.unwrap_or(Format::Json) {
        Format::Csv => render_csv(cfg, &out.table),
        Format::Json => {
            let doc = json!({ "config": cfg, "result": out.json });
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            Ok(s.into_bytes())
        }
    }
}

fn execute(cli: &Cli) -> Result<u8, CliError> {
    let (cfg, task) = resolve(cli)?;
    info!("running {} with seed {}", task.name(), cfg.seed);
    let out = tasks::run(&cfg, &task)?;
    let bytes = render(&cfg, &out)?;
    let target = cli.output.clone().or_else(|| cfg.output.path.clone().map(PathBuf::from));
    match target {
        Some(p) => fs::write(&p, bytes).map_err(|e| CliError::io(&format!("writing {}", p.display()), e))?,
        None => io::stdout().write_all(&bytes).map_err(|e| CliError::io("writing output", e))?,
    }
    Ok(out.status)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
