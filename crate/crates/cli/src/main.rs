use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use naqas::qsim::NoiseSpec;
use naqas_cli::commands::{self, CHECKPOINT};
use naqas_cli::{report, RunConfig};

#[derive(Parser)]
#[command(name = "naqas", version, about = "Noise-aware quantum architecture search")]
struct Cli {
    /// TOML run configuration; defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `out`).
    #[arg(long, global = true, env = "NAQAS_OUT")]
    out: Option<PathBuf>,
    /// Run seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Evaluation threads (overrides the config).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Simulate without any noise channel.
    #[arg(long, global = true)]
    noiseless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the shared parameters and write a checkpoint.
    Pretrain,
    /// Run the evolutionary search from a checkpoint.
    Search {
        /// Defaults to `<out>/checkpoint.txt`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Fine-tune and test one genome, with and without noise.
    Evaluate {
        /// Comma-separated layer indices, e.g. "12,0,7,201,3".
        genome: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Summarise a finished run directory.
    Report {
        /// Defaults to the output directory.
        #[arg(long)]
        run: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
    /// Pretrain, search and report in one go.
    Run {
        #[arg(long, default_value_t = 10)]
        top: usize,
    },
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    if cli.noiseless {
        cfg.noise = NoiseSpec::None;
    }
    cfg.validate()?;
    let out = cli.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("runs"));
    let checkpoint_or_default = |c: Option<PathBuf>| c.unwrap_or_else(|| out.join(CHECKPOINT));

    match cli.command {
        Command::Pretrain => {
            let done = commands::pretrain(&cfg, &out)?;
            println!("checkpoint: {}", done.checkpoint.display());
        }
        Command::Search { checkpoint } => {
            let outcome = commands::search(&cfg, &checkpoint_or_default(checkpoint), &out)?;
            println!("archive: {} entries in {}", outcome.archive.len(), out.join(commands::ARCHIVE).display());
        }
        Command::Evaluate { genome, checkpoint } => {
            let record = commands::evaluate(&cfg, &checkpoint_or_default(checkpoint), &genome)?;
            println!("{}", serde_json::to_string_pretty(&record)?);
        }
        Command::Report { run, top } => {
            let done = report(&run.unwrap_or(out), top)?;
            print!("{}", done.summary);
        }
        Command::Run { top } => {
            commands::pipeline(&cfg, &out)?;
            print!("{}", report(&out, top)?.summary);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
