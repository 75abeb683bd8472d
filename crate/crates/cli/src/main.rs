use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use bhvar_cli::config::dim_cap;
use bhvar_cli::output::{read_text, write_json};
use bhvar_cli::{parse_config, run_evolution, run_identity_suite, tasks, Scope};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bhvar", version, about = "Coherent-state mean-field dynamics for the Bose-Hubbard model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity suite and print a JSON report.
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        scope: Scope,
        /// Also write the report to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integrate one scheme and write CSV and summary files.
    Evolve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Build a cat state and write its report.
    Cat {
        #[arg(long)]
        config: PathBuf,
    },
    /// Decompose a Glauber state into fixed-number sectors.
    Weights {
        #[arg(long)]
        config: PathBuf,
    },
    /// Site to momentum transform of a coherent state.
    Dual {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(path: &Path) -> anyhow::Result<String> {
    Ok(read_text(path)?)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Verify { scope, output } => {
            let report = run_identity_suite(scope)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(path) = output {
                write_json(&path, &report)?;
            }
            Ok(report.passed)
        }
        Command::Evolve { config } => {
            let text = load(&config)?;
            let cfg = parse_config(&text).with_context(|| format!("in {}", config.display()))?;
            let result = run_evolution(&cfg)?;
            for path in result.write(&cfg)? {
                eprintln!("wrote {}", path.display());
            }
            Ok(true)
        }
        Command::Cat { config } => {
            let text = load(&config)?;
            let (_, path) = tasks::cat_command(&text, dim_cap()?).with_context(|| format!("in {}", config.display()))?;
            eprintln!("wrote {}", path.display());
            Ok(true)
        }
        Command::Weights { config } => {
            let text = load(&config)?;
            let (_, paths) =
                tasks::weights_command(&text, dim_cap()?).with_context(|| format!("in {}", config.display()))?;
            for path in paths {
                eprintln!("wrote {}", path.display());
            }
            Ok(true)
        }
        Command::Dual { config } => {
            let text = load(&config)?;
            let (_, path) = tasks::dual_command(&text, dim_cap()?).with_context(|| format!("in {}", config.display()))?;
            eprintln!("wrote {}", path.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
