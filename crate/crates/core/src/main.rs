use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use agentwatch::game::Role;
use agentwatch::harness::{
    gen_dataset, summarize, train_monitor, Experiment, ExperimentConfig, RunReport, Split, SplitManifest,
    WHODUNIT_SPLIT_SIZES,
};
use agentwatch::trajectory::{read_jsonl, Trajectory};

#[derive(Parser)]
#[command(name = "agentwatch", version, about = "Run monitored multi-agent games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/validation/test game splits.
    GenDataset {
        /// Experiment config; only its environment section is used.
        #[arg(long)]
        config: PathBuf,
        /// Split sizes as train,validation,test (deduction games only).
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Play every game of a split and write trajectories and a report.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Fit and select a per-role monitor from trajectory logs.
    TrainMonitor {
        /// Trajectories of the training split.
        #[arg(long)]
        train: PathBuf,
        /// Trajectories of the validation split.
        #[arg(long)]
        validation: PathBuf,
        #[arg(long)]
        role: Role,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        second_best: Option<PathBuf>,
        #[arg(long)]
        worst: Option<PathBuf>,
    },
    /// Tabulate reports; each argument is LABEL=PATH or PATH.
    Summarize {
        reports: Vec<String>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

type CliResult<T> = Result<T, String>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    std::fs::write(path, text + "\n").map_err(|e| format!("{}: {e}", path.display()))
}

fn read_trajectories(path: &Path) -> CliResult<Vec<Trajectory>> {
    let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    read_jsonl(BufReader::new(file)).map_err(|e| format!("{}: {e}", path.display()))
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::GenDataset {
            config,
            sizes,
            seed,
            out,
        } => {
            let config: ExperimentConfig = read_json(&config)?;
            let sizes = match sizes.as_deref() {
                Some([a, b, c]) => (*a, *b, *c),
                Some(other) => return Err(format!("--sizes needs 3 values, got {}", other.len())),
                None => WHODUNIT_SPLIT_SIZES,
            };
            let manifest = gen_dataset(&config.environment, sizes, seed).map_err(|e| e.to_string())?;
            write_json(&out, &manifest)?;
            println!(
                "{} manifest: train {}, validation {}, test {}",
                manifest.kind(),
                manifest.len(Split::Train),
                manifest.len(Split::Validation),
                manifest.len(Split::Test)
            );
        }
        Command::Run {
            config,
            manifest,
            split,
            seed,
            parallelism,
            output_dir,
        } => {
            let mut config: ExperimentConfig = read_json(&config)?;
            if let Some(s) = seed {
                config.seed = s;
            }
            if parallelism.is_some() {
                config.parallelism = parallelism;
            }
            if output_dir.is_some() {
                config.output_dir = output_dir;
            }
            let manifest: SplitManifest = read_json(&manifest)?;
            let games = manifest.games(split, &config.environment).map_err(|e| e.to_string())?;
            let out = Experiment::new(config)
                .and_then(|e| e.run(&games))
                .map_err(|e| e.to_string())?;
            let table = summarize(&[(split.as_str().to_string(), out.report)]).map_err(|e| e.to_string())?;
            print!("{}", table.to_text());
        }
        Command::TrainMonitor {
            train,
            validation,
            role,
            alpha,
            out,
            second_best,
            worst,
        } => {
            let train = read_trajectories(&train)?;
            let validation = read_trajectories(&validation)?;
            let grid = train_monitor(&train, &validation, role, alpha).map_err(|e| e.to_string())?;
            std::fs::write(&out, grid.best.to_json()).map_err(|e| format!("{}: {e}", out.display()))?;
            for (path, model) in [(second_best, grid.second_best()), (worst, grid.worst())] {
                if let (Some(path), Some(model)) = (path, model) {
                    std::fs::write(&path, model.to_json()).map_err(|e| format!("{}: {e}", path.display()))?;
                }
            }
            println!(
                "{}: tau {:.2}, validation gain {:.2}",
                grid.best.label(),
                grid.best.tau,
                grid.best.validation_gain
            );
        }
        Command::Summarize { reports, csv } => {
            let mut loaded = Vec::new();
            for arg in &reports {
                let (label, path) = match arg.split_once('=') {
                    Some((l, p)) => (l.to_string(), PathBuf::from(p)),
                    None => (arg.clone(), PathBuf::from(arg)),
                };
                let report: RunReport = read_json(&path)?;
                loaded.push((label, report));
            }
            let table = summarize(&loaded).map_err(|e| e.to_string())?;
            print!("{}", table.to_text());
            if let Some(path) = csv {
                std::fs::write(&path, table.to_csv()).map_err(|e| format!("{}: {e}", path.display()))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
