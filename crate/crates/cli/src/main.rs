// `!(x > 0.0)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use actigel::ErrorCategory;
use clap::{Parser, Subcommand};

mod config;
mod output;
mod scenario;

use config::Config;

/// Environment variable naming the default output root.
const OUTPUT_ROOT_VAR: &str = "ACTIGEL_OUTPUT_ROOT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] actigel::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Solver(e) => match e.category() {
                ErrorCategory::Input => 3,
                ErrorCategory::NoSolution => 4,
                ErrorCategory::Numerical => 5,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "actigel", version, about = "Thin-film solvers for active nematic films")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run {
        config: PathBuf,
        /// Output directory (default: $ACTIGEL_OUTPUT_ROOT/<config stem>).
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
        /// Worker threads for per-column solves.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Check a config file without running it.
    Validate { config: PathBuf },
}

fn output_dir(config: &Path, explicit: Option<PathBuf>) -> PathBuf {
    if let Some(dir) = explicit {
        return dir;
    }
    let root = std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("actigel-output"), PathBuf::from);
    let stem = config.file_stem().map_or_else(|| "run".into(), |s| s.to_os_string());
    root.join(stem)
}

fn load(path: &Path) -> Result<Config, CliError> {
    let cfg = Config::load(path)?;
    cfg.check()?;
    Ok(cfg)
}

fn run(config: &Path, output: Option<PathBuf>, threads: Option<usize>) -> Result<(), CliError> {
    let cfg = load(config)?;
    for w in cfg.warnings() {
        log::warn!("{w}");
    }
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let artifacts = scenario::run(&cfg)?;
    let dir = output_dir(config, output);
    let model = if cfg.scenario == config::Scenario::Lep { "lep" } else { "q-tensor" };
    let written = artifacts.commit(&dir, &cfg, model)?;
    for path in written {
        println!("{}", path.display());
    }
    Ok(())
}

fn validate(config: &Path) -> bool {
    println!("config: {}", config.display());
    match load(config) {
        Ok(cfg) => {
            println!("scenario: {}", cfg.scenario.tag());
            let warnings = cfg.warnings();
            for w in &warnings {
                println!("warning: {w}");
            }
            println!("status: {}", if warnings.is_empty() { "valid" } else { "valid with warnings" });
            true
        }
        Err(e) => {
            println!("error: {e}");
            println!("status: invalid");
            false
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, output, threads } => match run(&config, output, threads) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("actigel: {e}");
                ExitCode::from(e.exit_code())
            }
        },
        Command::Validate { config } => {
            if validate(&config) {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
    }
}
