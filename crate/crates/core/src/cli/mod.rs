//! `supstate` command-line front end.
//!
//! Every command reads its parameters from flags, optionally layered over a
//! JSON config file (`--config`), and writes a [`RunRecord`] as JSON or a CSV
//! table. Flags override file values; missing values take the defaults listed
//! in each config struct.

mod commands;
mod config;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use crate::error::Error;

pub use config::{
    CircuitDemoConfig, Cplx, MultiConfig, NogoConfig, OpticsConfig, SuperposeTwoConfig, SweepConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_ASSERTION: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "supstate",
    version,
    about = "Simulate probabilistic protocols that superpose unknown pure states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the two-state protocol on random inputs at fixed overlaps.
    SuperposeTwo(CommandArgs<config::SuperposeTwoArgs>),
    /// Tabulate both two-state protocols over a grid of overlaps and weights.
    Sweep(CommandArgs<config::SweepArgs>),
    /// Run the d-state protocol on random inputs.
    Multi(CommandArgs<config::MultiArgs>),
    /// Superpose the outputs of two qubit circuits.
    CircuitDemo(CommandArgs<config::CircuitDemoArgs>),
    /// Search for a linear map that superposes every pair of qubit states.
    Nogo(CommandArgs<config::NogoArgs>),
    /// Superpose two truncated coherent states.
    OpticsDemo(CommandArgs<config::OpticsArgs>),
}

#[derive(Debug, Args)]
pub struct CommandArgs<T: Args> {
    #[command(flatten)]
    pub params: T,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// JSON file with parameters; flags take precedence.
    #[arg(long, global = false)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave the timestamp out so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timestamp: bool,
}

/// Output envelope shared by all commands.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub config: Value,
    pub results: Value,
}

/// A command's numbers: the JSON payload, its CSV rendering, and any
/// self-check that failed.
pub(crate) struct Report {
    pub results: Value,
    pub csv_header: Vec<String>,
    pub csv_rows: Vec<Vec<String>>,
    pub failed_check: Option<String>,
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Lib(Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(Error::DimensionTooLarge { .. }) => EXIT_RESOURCE,
            _ => EXIT_CONFIG,
        }
    }
}

fn read_config_file(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn run_command(cmd: &Command) -> Result<(&'static str, Value, Report, &OutputArgs), CliError> {
    macro_rules! dispatch {
        ($name:literal, $args:expr, $resolve:path, $exec:path) => {{
            let file = $args
                .output
                .config
                .as_deref()
                .map(read_config_file)
                .transpose()?;
            let cfg = $resolve(&$args.params, file)?;
            let report = $exec(&cfg)?;
            let echo = serde_json::to_value(&cfg).expect("config serializes");
            Ok(($name, echo, report, &$args.output))
        }};
    }
    match cmd {
        Command::SuperposeTwo(a) => dispatch!(
            "superpose-two",
            a,
            config::SuperposeTwoConfig::resolve,
            commands::superpose_two
        ),
        Command::Sweep(a) => dispatch!("sweep", a, config::SweepConfig::resolve, commands::sweep),
        Command::Multi(a) => dispatch!("multi", a, config::MultiConfig::resolve, commands::multi),
        Command::CircuitDemo(a) => dispatch!(
            "circuit-demo",
            a,
            config::CircuitDemoConfig::resolve,
            commands::circuit_demo
        ),
        Command::Nogo(a) => dispatch!("nogo", a, config::NogoConfig::resolve, commands::nogo),
        Command::OpticsDemo(a) => dispatch!(
            "optics-demo",
            a,
            config::OpticsConfig::resolve,
            commands::optics_demo
        ),
    }
}

fn render(
    command: &str,
    echo: Value,
    report: &Report,
    output: &OutputArgs,
) -> Result<Vec<u8>, CliError> {
    match output.format {
        Format::Json => {
            let record = RunRecord {
                command: command.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                timestamp: (!output.no_timestamp).then(|| chrono::Utc::now().to_rfc3339()),
                config: echo,
                results: report.results.clone(),
            };
            let mut text = serde_json::to_string_pretty(&record).expect("record serializes");
            text.push('\n');
            Ok(text.into_bytes())
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| CliError::Io(format!("cannot write CSV: {e}"));
            w.write_record(&report.csv_header).map_err(io)?;
            for row in &report.csv_rows {
                w.write_record(row).map_err(io)?;
            }
            w.into_inner()
                .map_err(|e| CliError::Io(format!("cannot write CSV: {e}")))
        }
    }
}

fn emit(bytes: &[u8], out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io(format!("cannot write to stdout: {e}"))),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = run_command(&cli.command).and_then(|(name, echo, report, output)| {
        let bytes = render(name, echo, &report, output)?;
        emit(&bytes, output.out.as_deref())?;
        Ok(report.failed_check)
    });
    match result {
        Ok(None) => EXIT_OK,
        Ok(Some(check)) => {
            eprintln!("error: self-check failed: {check}");
            EXIT_ASSERTION
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
