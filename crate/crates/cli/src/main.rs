// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use ctxdfm::pipeline::{
    cmd_check, cmd_gen, cmd_repro, cmd_score, cmd_train, cmd_trainset, ExperimentConfig,
    Overrides, PipelineError, SeedTarget,
};
use ctxdfm::CombineMode;

/// Context-aware DFM scoring of metal-via enclosure violations.
#[derive(Parser)]
#[command(name = "ctxdfm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic layout and its planted-truth file.
    Gen(Common),
    /// Run the enclosure check and write the violation database.
    Check(Common),
    /// Extract and label context vectors for training.
    Trainset(Common),
    /// Train the network and write weights plus the per-epoch loss log.
    Train(Common),
    /// Score violations and write the binned report.
    Score(Common),
    /// Train on one generated design and evaluate on another.
    Repro(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Generator seed (gen, repro) or trainer seed (train).
    #[arg(long)]
    seed: Option<u64>,
    /// Score combination: geomean, min or product.
    #[arg(long)]
    mode: Option<CombineMode>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load(common: &Common, target: SeedTarget) -> Result<ExperimentConfig, PipelineError> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    let overrides = Overrides {
        seed: common.seed,
        mode: common.mode,
        out: common.out.clone(),
    };
    cfg.apply(&overrides, target)?;
    Ok(cfg)
}

fn run(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Gen(c) => {
            let s = cmd_gen(&load(&c, SeedTarget::Generator)?)?;
            println!(
                "{}: {} vias, {} planted violations, {} planted hotspots",
                s.design, s.vias, s.planted_violations, s.planted_hotspots
            );
        }
        Command::Check(c) => {
            let db = cmd_check(&load(&c, SeedTarget::None)?)?;
            println!(
                "{}: {} violations, {} drc errors",
                db.design_name,
                db.violations.len(),
                db.drc_errors.len()
            );
        }
        Command::Trainset(c) => {
            let set = cmd_trainset(&load(&c, SeedTarget::None)?)?;
            let hot = set.iter().filter(|v| v.label == Some(true)).count();
            println!("{} examples, {} labeled hotspot", set.len(), hot);
        }
        Command::Train(c) => {
            let cfg = load(&c, SeedTarget::Trainer)?;
            let outcome = cmd_train(&cfg)?;
            println!(
                "{} epochs, final MSE {:.6} (target {})",
                outcome.loss_history.len(),
                outcome.final_mse(),
                cfg.train.target_mse
            );
        }
        Command::Score(c) => {
            let report = cmd_score(&load(&c, SeedTarget::None)?)?;
            print!("{}", report.to_table());
        }
        Command::Repro(c) => {
            let summary = cmd_repro(&load(&c, SeedTarget::Generator)?)?;
            println!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ctxdfm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
