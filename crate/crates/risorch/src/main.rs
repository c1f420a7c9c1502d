use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use risorch::app::{self, Experiment};

#[derive(Parser)]
#[command(name = "risorch", version, about = "RIS codebook compilation and multi-user orchestration experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile the codebook described by the config.
    Compile {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Codebook directory (default: <out>/codebook).
        #[arg(long)]
        codebook: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run Monte Carlo experiments against a compiled codebook.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        codebook: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        /// alloc, ee, admission or all.
        #[arg(long, default_value = "all", value_parser = parse_experiment)]
        experiment: Experiment,
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Rasterize the SNR for the state named in the [snrmap] section.
    Snrmap {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        codebook: Option<PathBuf>,
    },
}

fn parse_experiment(s: &str) -> Result<Experiment, String> {
    Experiment::parse(s).ok_or_else(|| format!("unknown experiment {s:?} (alloc, ee, admission, all)"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Compile {
            config,
            out,
            codebook,
            workers,
        } => app::compile(&app::CompileArgs {
            config,
            out: out.as_deref(),
            codebook: codebook.as_deref(),
            workers: *workers,
        }),
        Command::Run {
            config,
            out,
            codebook,
            workers,
            experiment,
            seed_override,
        } => app::run(&app::RunArgs {
            config,
            out: out.as_deref(),
            codebook: codebook.as_deref(),
            workers: *workers,
            experiment: *experiment,
            seed_override: *seed_override,
        }),
        Command::Snrmap {
            config,
            out,
            codebook,
        } => app::snrmap(&app::SnrMapArgs {
            config,
            out: out.as_deref(),
            codebook: codebook.as_deref(),
        }),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
