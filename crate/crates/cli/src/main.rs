mod commands;
mod config;
mod error;
mod report;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use commands::classify::ClassifyArgs;
use commands::oracle::OracleArgs;
use commands::stab::StabArgs;
use commands::tee::TeeArgs;
use commands::threshold::ThresholdArgs;
use config::ConfigFile;
use error::CliError;
use report::Format;
use serde_json::json;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

/// Phases of decohered topological orders and the toric-code decoherence
/// transition.
#[derive(Parser, Debug)]
#[command(name = "efd", version)]
struct Cli {
    /// `key = value` file with optional `[section]` headers; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads. With 1 thread, reruns are bit-identical.
    #[arg(long, global = true, env = "EFD_THREADS", default_value_t = 1, value_parser = parse_threads)]
    threads: usize,
    /// Write the report here instead of stdout.
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
    /// Report format; `threshold` and `tee` default to csv, the rest to table.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Enumerate symmetric Lagrangian subgroups of a replicated theory.
    Classify(ClassifyArgs),
    /// Binder-cumulant crossing scan for the critical error rate.
    Threshold(ThresholdArgs),
    /// Kitaev–Preskill topological entanglement entropy by Monte Carlo.
    Tee(TeeArgs),
    /// Exact small-lattice values of loop-model observables.
    Oracle(OracleArgs),
    /// Entanglement of the p = 0 and p = 1/2 stabilizer limits.
    Stab(StabArgs),
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Classify(_) => "classify",
            Cmd::Threshold(_) => "threshold",
            Cmd::Tee(_) => "tee",
            Cmd::Oracle(_) => "oracle",
            Cmd::Stab(_) => "stab",
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Cmd::Threshold(_) | Cmd::Tee(_) => Format::Csv,
            _ => Format::Table,
        }
    }

    fn args_json(&self) -> serde_json::Value {
        match self {
            Cmd::Classify(a) => json!(a),
            Cmd::Threshold(a) => json!(a),
            Cmd::Tee(a) => json!(a),
            Cmd::Oracle(a) => json!(a),
            Cmd::Stab(a) => json!(a),
        }
    }
}

/// Parses the command line, folding in config-file entries the command
/// line does not set.
fn parse_cli(mut argv: Vec<OsString>) -> Result<Cli, CliError> {
    let root = Cli::command();
    // Lenient first pass: required flags may come from the config file.
    let lenient = root.clone().ignore_errors(true).try_get_matches_from(&argv).ok();
    let path = lenient.as_ref().and_then(|m| m.get_one::<PathBuf>("config").cloned());
    let (Some(matches), Some(path)) = (lenient, path) else {
        let matches = root.try_get_matches_from(&argv).unwrap_or_else(|e| e.exit());
        return Ok(Cli::from_arg_matches(&matches).unwrap_or_else(|e| e.exit()));
    };
    let path = &path;
    let file = ConfigFile::read(path)?;
    let (name, sub_matches) = matches.subcommand().expect("subcommand is required");
    argv.extend(file.overrides(&root, &matches, name, sub_matches)?.into_iter().map(OsString::from));
    let merged = root.try_get_matches_from(&argv).map_err(|e| CliError::Input(format!("{path:?}: {e}")))?;
    Cli::from_arg_matches(&merged).map_err(|e| CliError::Input(e.to_string()))
}

fn run() -> Result<(), CliError> {
    let cli = parse_cli(std::env::args_os().collect())?;
    let format = cli.format.unwrap_or_else(|| cli.command.default_format());
    let config = json!({
        "config_file": cli.config,
        "threads": cli.threads,
        "format": format,
        "output": cli.output,
        cli.command.name(): cli.command.args_json(),
    });
    let start = Instant::now();
    let report = match &cli.command {
        Cmd::Classify(a) => commands::classify::run(a, config)?,
        Cmd::Threshold(a) => commands::threshold::run(a, cli.threads, config)?,
        Cmd::Tee(a) => commands::tee::run(a, cli.threads, config)?,
        Cmd::Oracle(a) => commands::oracle::run(a, config)?,
        Cmd::Stab(a) => commands::stab::run(a, config)?,
    };
    let text = report.render(format, start.elapsed().as_secs_f64());
    match &cli.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("efd: {e}");
        std::process::exit(e.exit_code());
    }
}

fn parse_threads(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("thread count must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}
