use std::path::PathBuf;
use std::process::ExitCode;

use aqft_cli::config::{RunConfig, Suite};
use aqft_cli::{run, CliError};
use clap::{Parser, Subcommand};

/// Checks finite-dimensional nets of observables against their axioms.
#[derive(Parser)]
#[command(name = "aqft", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the check suites; exit 0 if all pass, 1 on failures, 2 on configuration errors.
    Check {
        config: PathBuf,
        /// Override the configured tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// Write the JSON report here and the text report beside it.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated suites replacing the configured selection.
        #[arg(long, value_delimiter = ',')]
        suite: Option<Vec<Suite>>,
    },
    /// Print region, arrow, square and algebra counts.
    Info { config: PathBuf },
    /// Print generator, closure and square counts of the spacetime.
    Gamma { config: PathBuf },
}

fn load(path: &PathBuf, tol: Option<f64>, suite: Option<Vec<Suite>>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(path)?;
    if tol.is_some() {
        cfg.tolerance = tol;
    }
    if suite.is_some() {
        cfg.suites = suite;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Check { config, tol, out, suite } => {
            let cfg = load(&config, tol, suite)?;
            let doc = run::check(&cfg)?;
            print!("{}", doc.to_text());
            if let Some(path) = out.or_else(|| cfg.output.clone()) {
                doc.write(&path)?;
            }
            Ok(doc.exit_code())
        }
        Command::Info { config } => {
            print!("{}", run::info(&load(&config, None, None)?)?);
            Ok(0)
        }
        Command::Gamma { config } => {
            print!("{}", run::gamma(&load(&config, None, None)?)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
