use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use mkdv_lab::commands::{resolve, run, Command, Status};
use mkdv_lab::config::{ExperimentConfig, OUTPUT_KEY};
use mkdv_lab::error::{LabError, EXIT_FAILURE};

/// Runs one mkdv-lab experiment.
///
/// Exit codes: 0 success, 2 tolerance violation, 3 blow-up, 1 other errors.
#[derive(Debug, Parser)]
#[command(name = "mkdv-lab", version)]
struct Cli {
    /// simulate, apriori-sweep, decoherence, audit, miura, probe-strichartz or envelope.
    command: String,
    /// Flat key=value config file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Overrides, e.g. `--set n_max=128 --set seed=3`.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (default: current directory).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Print the resolved config and exit.
    #[arg(long)]
    print_config: bool,
}

fn execute(cli: &Cli) -> Result<i32, LabError> {
    let command: Command = cli.command.parse()?;
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::new(),
    };
    cfg.apply_overrides(&cli.overrides)?;
    if let Some(out) = &cli.output {
        cfg.set(OUTPUT_KEY, out.display());
    }
    if cli.print_config {
        let resolved = resolve(command, &cfg)?;
        print!("{}", resolved.canonical());
        println!("# config_sha256: {}", resolved.hash(command.name()));
        return Ok(0);
    }
    let outcome = run(command, &cfg)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    if let Status::ToleranceViolation(list) = &outcome.status {
        for v in list {
            eprintln!("tolerance violation: {v}");
        }
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("mkdv-lab {}: {e}", cli.command);
            e.exit_code()
        }
    };
    ExitCode::from(u8::try_from(code).unwrap_or(EXIT_FAILURE as u8))
}
