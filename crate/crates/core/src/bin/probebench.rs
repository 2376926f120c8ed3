use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use probebench::config::ExperimentConfig;
use probebench::pipeline;

#[derive(Parser)]
#[command(version, about = "Layer-wise probing of speech and text embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the per-utterance feature table.
    Features,
    /// Write the random-baseline embedding set.
    Baseline,
    /// Train probes for every feature, layer and model.
    Probe,
    /// Write layer profiles and comparison tables.
    Report,
    /// Train the downstream classifier for each layer mode.
    Downstream,
    /// Run every stage in order.
    All,
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out_dir = o;
    }
    match cli.command {
        Command::Features => println!("{}", pipeline::cmd_features(&cfg)?.display()),
        Command::Baseline => println!("{}", pipeline::cmd_baseline(&cfg)?.display()),
        Command::Probe => {
            let s = pipeline::cmd_probe(&cfg)?;
            for (feature, model, layer, reason) in &s.failed {
                eprintln!("skipped {feature} on {model}/{layer}: {reason}");
            }
            println!(
                "{} ({} trained, {} resumed, {} skipped)",
                s.path.display(),
                s.trained,
                s.resumed,
                s.failed.len()
            );
        }
        Command::Report => {
            for p in pipeline::cmd_report(&cfg)? {
                println!("{}", p.display());
            }
        }
        Command::Downstream => println!("{}", pipeline::cmd_downstream(&cfg)?.display()),
        Command::All => pipeline::run_all(&cfg)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
