use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use pmcore::game::resolve_game;
use pmcore::harness::{
    format_monitor_table, format_table, monitor, read_report, replicate, write_experiment,
    ExperimentConfig, MonitorConfig,
};
use pmcore::GameStructure;

#[derive(Parser)]
#[command(
    name = "pmkit",
    version,
    about = "Partial-monitoring games, CBP-family learners and a seeded regret harness"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the cell decomposition, neighbors, observers and observability class of a game.
    Analyze {
        /// Bundled game name (apple_tasting, label_efficient, tau_detection:<tau>) or a JSON file.
        game: String,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a repeated-seed regret experiment.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long)]
        horizon: Option<u64>,
        /// Keep every n-th round in the curves file.
        #[arg(long)]
        stride: Option<u64>,
        /// Results directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Run the classifier-monitoring protocol.
    Monitor {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        /// Write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a results directory written by `simulate`.
    Report {
        dir: PathBuf,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { game, out } => {
            let game = resolve_game(&game)?;
            let structure = GameStructure::analyze(&game)?;
            let json = serde_json::to_string_pretty(&structure.report(&game))?;
            match out {
                Some(p) => {
                    fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?
                }
                None => println!("{json}"),
            }
        }
        Command::Simulate {
            config,
            seed,
            runs,
            horizon,
            stride,
            out,
        } => {
            let mut cfg: ExperimentConfig = read_json(&config)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.runs = runs.unwrap_or(cfg.runs);
            cfg.horizon = horizon.unwrap_or(cfg.horizon);
            cfg.stride = stride.unwrap_or(cfg.stride);
            let exp = replicate(&cfg)?;
            write_experiment(&exp, &out, cfg.stride)?;
            print!("{}", format_table(&exp.summary));
        }
        Command::Monitor {
            config,
            seed,
            runs,
            out,
        } => {
            let mut cfg: MonitorConfig = read_json(&config)?;
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.runs = runs.unwrap_or(cfg.runs);
            let report = monitor(&cfg)?;
            if let Some(p) = out {
                if let Some(parent) = p.parent() {
                    fs::create_dir_all(parent)?;
                }
                fs::write(&p, serde_json::to_string_pretty(&report)?)
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            print!("{}", format_monitor_table(&report));
        }
        Command::Report { dir, json } => {
            let summary = read_report(&dir)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&summary)?);
            } else {
                print!("{}", format_table(&summary));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
