use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::error;

use gqas_cli::{CliError, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "gqas", version, about = "Quantum-assisted simulation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the basis, measure overlaps and integrate.
    Run {
        config: PathBuf,
        /// Reuse a stored overlap directory instead of measuring.
        #[arg(long)]
        overlaps: Option<PathBuf>,
        /// Start from a stored initial state file.
        #[arg(long)]
        initial: Option<PathBuf>,
        /// Add dense reference columns.
        #[arg(long, hide = true)]
        with_oracle: bool,
    },
    /// Repeat a run over values of one numeric key.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long, hide = true)]
        with_oracle: bool,
    },
    /// Measure and store the overlap matrices only.
    Overlaps { config: PathBuf },
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var("GQAS_THREADS") {
        let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Config {
            key: "GQAS_THREADS".into(),
            message: format!("expected a positive integer, got `{raw}`"),
        })?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("thread pool is configured once");
    }
    Ok(())
}

fn load(path: &PathBuf, with_oracle: bool) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::load(path)?;
    if with_oracle {
        cfg.with_oracle = true;
        cfg = cfg.resolved()?;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Run {
            config,
            overlaps,
            initial,
            with_oracle,
        } => {
            let cfg = load(&config, with_oracle)?;
            let art = gqas_cli::run(&cfg, &RunOptions { overlaps, initial })?;
            if let Some(s) = art.summary {
                println!(
                    "{}: end {} max {}{}",
                    s.primary,
                    s.end_value,
                    s.max_value,
                    s.min_fidelity.map(|f| format!(" min fidelity {f}")).unwrap_or_default()
                );
            }
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Sweep {
            config,
            key,
            values,
            with_oracle,
        } => {
            let cfg = load(&config, with_oracle)?;
            for (v, s) in gqas_cli::sweep(&cfg, &key, &values)? {
                println!("{key} = {v}: {} end {} max {}", s.primary, s.end_value, s.max_value);
            }
            println!("wrote {}", cfg.output_dir.join(format!("sweep_{key}.csv")).display());
        }
        Command::Overlaps { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let set = gqas_cli::overlaps(&cfg)?;
            println!("{} x {} overlaps in {}", set.dim(), set.dim(), cfg.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
