use std::path::PathBuf;
use std::process::ExitCode;

use ambiview::{CliError, Command, Run};
use clap::{Parser, Subcommand};

/// Viewpoint ambiguity experiments on synthetic twin objects.
#[derive(Parser)]
#[command(name = "ambiview", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment manifest (TOML); defaults are used if omitted.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides the manifest's root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); affects speed only.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Log progress to stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Rank every orientation of both twins by ambiguity.
    Rank(Common),
    /// Classifier accuracy over training thresholds and evaluation caps.
    Sweep(Common),
    /// Next-best-view versus random episodes.
    Simulate(Common),
    /// Alternative similarity metrics against the embedding similarity.
    Compare(Common),
    /// Print the default manifest.
    Manifest,
}

fn run(command: Command, c: Common) -> Result<(), CliError> {
    env_logger::Builder::new()
        .filter_level(if c.verbose {
            log::LevelFilter::Info
        } else {
            log::LevelFilter::Warn
        })
        .init();
    let run = Run::resolve(command, c.manifest.as_deref(), &c.out, c.seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(c.threads)
        .build()
        .map_err(|e| CliError::Config(format!("--threads: {e}")))?;
    let files = pool.install(|| run.execute())?;
    for f in files {
        println!("{}", run.out.join(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match cli.command {
        Cmd::Rank(c) => (Command::Rank, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Compare(c) => (Command::Compare, c),
        Cmd::Manifest => {
            print!("{}", ambiview::Manifest::default().to_toml());
            return ExitCode::SUCCESS;
        }
    };
    match run(command, common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
