//! `gebound`: fit, bound, tune K, simulate and measure coverage.
//!
//! Every command reads an optional config file (`--config`, TOML or JSON)
//! layered under `key=value` overrides. Results go to stdout as JSON;
//! errors go to stderr as `{"error": {"code", "message"}}` with exit
//! status 2.

mod commands;
mod error;
mod layered;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::Output;
use crate::error::{CliError, CliResult};
use crate::layered::Layered;

#[derive(Parser)]
#[command(name = "gebound", version, about = "Penalized regression with generalization-error bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file (TOML, or JSON when the extension is .json).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for reports and artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// `key=value` overrides; dotted keys reach nested tables.
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Tune a lasso/ridge/OLS fit on a CSV dataset by validation or K-fold CV.
    Fit {
        #[command(flatten)]
        common: Common,
        /// Print a Markdown summary table instead of JSON.
        #[arg(long)]
        report: bool,
    },
    /// Evaluate the eGE upper bound for a request (ete, n_t, n_s, h, tail).
    Bounds {
        #[command(flatten)]
        common: Common,
    },
    /// Choose the number of CV folds minimizing the expected bound.
    TuneK {
        #[command(flatten)]
        common: Common,
    },
    /// Run a replicated simulation study and write its artifacts.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Measure how often a bound holds across replications.
    Coverage {
        #[command(flatten)]
        common: Common,
        /// Bound kind (ege-validation, ege-cv, ols-gaussian, distance-ols, distance-fsr).
        #[arg(long)]
        kind: Option<String>,
    },
}

fn run(cli: Cli) -> CliResult<Output> {
    let common = match &cli.command {
        Command::Fit { common, .. }
        | Command::Bounds { common }
        | Command::TuneK { common }
        | Command::Simulate { common }
        | Command::Coverage { common, .. } => common,
    };
    if let Some(j) = common.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    }
    let layered = Layered::load(common.config.as_deref(), &common.overrides)?;
    let out = common.out.as_deref();
    match &cli.command {
        Command::Fit { report, .. } => commands::fit(layered, common.seed, out, *report),
        Command::Bounds { .. } => commands::bounds(layered, out),
        Command::TuneK { .. } => commands::tune_k(layered, out),
        Command::Simulate { .. } => commands::simulate(layered, common.seed, out),
        Command::Coverage { kind, .. } => commands::coverage(layered, common.seed, out, kind.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            eprintln!(r#"{{"error":{{"code":"USAGE","message":{}}}}}"#, serde_json::Value::String(msg.trim().into()));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(output) => {
            let text = match output {
                Output::Json(v) => serde_json::to_string_pretty(&v).expect("json output") + "\n",
                Output::Text(t) => t,
            };
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = std::io::stdout().lock().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(2)
        }
    }
}
