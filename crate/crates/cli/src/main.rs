//! `fplab`: list, describe and run the registered experiments.
//!
//! Exit status is 0 when every check passes, 2 when a property check fails (records are
//! still written) and 1 on any error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fplab_experiments::{entries, lookup, run_experiment, ExpError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "fplab", version, about = "Frequency-principle experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and print its summary.
    Run {
        name: String,
        /// TOML file overriding any default of the experiment.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use seeds 0..N instead of the configured list.
        #[arg(long)]
        seed_count: Option<usize>,
        /// Output directory; records go to DIR/<name>/.
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// List the registered experiments.
    List,
    /// Show an experiment's anchor, description and default configuration.
    Describe { name: String },
}

fn run(cmd: Command) -> Result<bool, ExpError> {
    match cmd {
        Command::List => {
            for e in entries() {
                println!("{:<22} {:<24} {}", e.name, e.anchor, e.description);
            }
            Ok(true)
        }
        Command::Describe { name } => {
            let e = lookup(&name)?;
            let cfg = ExperimentConfig::resolve(&name, None)?;
            println!("# {} ({})\n# {}\n", e.name, e.anchor, e.description);
            print!("{}", cfg.to_toml());
            Ok(true)
        }
        Command::Run { name, config, seed_count, out } => {
            let overrides = config.map(|p| fplab_io::load_toml_table(&p)).transpose()?;
            let mut cfg = ExperimentConfig::resolve(&name, overrides.as_ref())?;
            if let Some(n) = seed_count {
                if n == 0 {
                    return Err(ExpError::Config("--seed-count must be at least 1".into()));
                }
                cfg = cfg.with_seed_count(n);
            }
            cfg.out_dir = Some(out);
            let outcome = run_experiment(&cfg)?;
            print!("{}", outcome.summary.render());
            Ok(outcome.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
