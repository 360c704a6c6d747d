use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use affmax_cli::{catalog, run, write_artifacts, Config, ConfigError, RunError};

/// Runs maximal-operator experiments from a TOML config.
///
/// Exit status: 0 when every check passes, 1 when a check fails, 2 for an
/// invalid config or a computation error.
#[derive(Parser)]
#[command(name = "affmax", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    /// Experiment config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact path prefix; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Divide grid spacing by this factor.
    #[arg(long, default_value_t = 1)]
    refine: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Print every experiment id with the statement it checks.
    ListExperiments,
}

fn execute(cli: Cli) -> Result<bool, RunError> {
    let path = cli.config.ok_or_else(|| ConfigError::new("--config", "required"))?;
    let mut cfg = Config::from_file(&path)?;
    if let Some(seed) = cli.seed {
        cfg.override_seed(seed);
    }
    cfg.refine(cli.refine)?;
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| ConfigError::new("--threads", e.to_string()))?;
    }
    let prefix = cli
        .out
        .or_else(|| cfg.output.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&cfg.experiment));
    let outcome = run(&cfg)?;
    let art = write_artifacts(&outcome, &prefix)?;
    print!("{}", outcome.report.summary());
    log::info!("wrote {} in {:.2}s", art.json.display(), outcome.report.wall_time);
    Ok(outcome.report.pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(Command::ListExperiments) = cli.command {
        print!("{}", catalog());
        return ExitCode::SUCCESS;
    }
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
    }
}
