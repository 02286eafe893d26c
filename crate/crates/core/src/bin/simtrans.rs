use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use simtrans::experiment::{
    cmd_ablation, cmd_gen_data, cmd_noise_study, cmd_report, cmd_run, cmd_scale_study, cmd_transfer_study,
    ExperimentConfig, Table,
};

#[derive(Parser)]
#[command(name = "simtrans", version, about = "Weak-shot classification by similarity transfer on synthetic data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// `key = value` config file; flags below override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run this single seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    noise_ratio: Option<f64>,
    #[arg(long, global = true)]
    no_weights: bool,
    #[arg(long, global = true)]
    no_reg: bool,
    #[arg(long, global = true)]
    no_adversarial: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the noisy dataset of every seed.
    GenData,
    /// Full pipeline with the configured toggles.
    Run,
    /// All seven module combinations.
    Ablation,
    /// Pair metrics on base vs novel test, and similarity sources x types.
    TransferStudy,
    /// Base set size grid.
    ScaleStudy,
    /// Accuracy of Cls and SimTrans across noise ratios.
    NoiseStudy,
    /// Consolidate a run directory (defaults to the output directory).
    Report { run_dir: Option<PathBuf> },
}

fn config(c: &Common) -> simtrans::Result<ExperimentConfig> {
    let mut config = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        config.seeds = vec![s];
    }
    if let Some(o) = &c.out {
        config.out = o.clone();
    }
    if let Some(r) = c.noise_ratio {
        config.noise.ratio = r;
    }
    config.classifier.use_weights &= !c.no_weights;
    config.classifier.use_reg &= !c.no_reg;
    config.use_adversarial &= !c.no_adversarial;
    config.validate()?;
    Ok(config)
}

fn print(t: &Table) {
    print!("{}", t.to_csv());
}

fn run(cli: Cli) -> simtrans::Result<()> {
    let config = config(&cli.common)?;
    match cli.command {
        Command::GenData => {
            for p in cmd_gen_data(&config)? {
                println!("{}", p.display());
            }
        }
        Command::Run => print(&cmd_run(&config)?),
        Command::Ablation => print(&cmd_ablation(&config)?),
        Command::TransferStudy => {
            let study = cmd_transfer_study(&config)?;
            print(&simtrans::experiment::summarize(&study.sources, &["source", "similarity"], &["accuracy"])?);
        }
        Command::ScaleStudy => print(&cmd_scale_study(&config)?),
        Command::NoiseStudy => print(&cmd_noise_study(&config)?),
        Command::Report { run_dir } => {
            let report = cmd_report(&run_dir.unwrap_or(config.out))?;
            println!("{}", report.dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error kind={} msg={msg:?}", e.kind());
            ExitCode::FAILURE
        }
    }
}
