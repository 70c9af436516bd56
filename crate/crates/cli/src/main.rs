use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{error, info, warn};

use specjoint::corpus::{Manifest, Split};
use specjoint::pipeline::{self, RunConfig};

/// Multi-objective DNN speech enhancement: corpus preparation, training,
/// enhancement, and evaluation.
#[derive(Parser, Debug)]
#[command(name = "specjoint", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// key = value configuration file; flags take precedence over it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Seed for splits, noise offsets, initialization and shuffling.
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,

    /// Worker threads for per-utterance work. Outputs do not depend on it.
    #[arg(long, global = true, value_name = "N", default_value_t = 1)]
    jobs: usize,

    /// baseline, mfcc-o, mfcc, ibm or mfcc+ibm.
    #[arg(long, global = true, value_name = "NAME")]
    variant: Option<String>,

    #[arg(long, global = true, value_name = "on|off")]
    post_process: Option<OnOff>,

    /// Override any configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OnOff {
    On,
    Off,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Mix clean and noise WAVs over the SNR grid and extract features.
    Prepare {
        #[arg(long)]
        clean_dir: PathBuf,
        #[arg(long)]
        noise_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Train a network on a prepared data directory.
    Train {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Enhance a WAV file or every WAV in a directory.
    Enhance {
        #[arg(long)]
        checkpoint: PathBuf,
        /// WAV file or directory of WAV files.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// SSNR and STOI per noise and SNR condition, as CSV.
    Evaluate {
        #[command(flatten)]
        set: EvalSet,
    },
    /// Mean clean-minus-enhanced LPS per frequency bin, as CSV.
    DistortionProfile {
        #[command(flatten)]
        set: EvalSet,
    },
    /// Print every configuration key with its default value.
    DumpDefaults,
}

#[derive(Args, Debug)]
struct EvalSet {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    enhanced_dir: PathBuf,
    /// Look up clean references here by file name instead of the manifest path.
    #[arg(long)]
    clean_dir: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: Split,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve_config(g: &GlobalOpts) -> Result<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::read(p).with_context(|| format!("loading {}", p.display()))?,
        None => RunConfig::default(),
    };
    for kv in &g.overrides {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(seed) = g.seed {
        cfg.train.seed = seed;
    }
    if let Some(v) = &g.variant {
        cfg.set("variant", v)?;
    }
    if let Some(pp) = g.post_process {
        cfg.post_process.enabled = matches!(pp, OnOff::On);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Returns whether the command completed without skipping anything.
fn run(cli: Cli) -> Result<bool> {
    if let Command::DumpDefaults = cli.command {
        print!("{}", RunConfig::default().to_text());
        return Ok(true);
    }
    let cfg = resolve_config(&cli.global)?;
    let jobs = cli.global.jobs;
    if jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    match cli.command {
        Command::Prepare {
            clean_dir,
            noise_dir,
            out_dir,
        } => {
            let report = pipeline::prepare(&cfg, &clean_dir, &noise_dir, &out_dir, jobs)?;
            for (p, why) in &report.failures {
                error!("unusable input {}: {why}", p.display());
            }
            info!("{} manifest entries written to {}", report.manifest.entries.len(), out_dir.display());
            Ok(report.is_complete())
        }
        Command::Train { data_dir, out_dir } => {
            let report = pipeline::train_model(&cfg, &data_dir, &out_dir, jobs)?;
            info!(
                "best epoch {} of {}, checkpoint in {}",
                report.best_epoch,
                report.history.len(),
                out_dir.display()
            );
            Ok(true)
        }
        Command::Enhance {
            checkpoint,
            input,
            out_dir,
        } => {
            let report = pipeline::enhance_path(&cfg, &checkpoint, &input, &out_dir, jobs)?;
            for (p, why) in &report.failures {
                error!("failed to enhance {}: {why}", p.display());
            }
            Ok(report.is_complete())
        }
        Command::Evaluate { set } => {
            let manifest = Manifest::read(&set.manifest)?;
            let report = pipeline::evaluate(&cfg, &manifest, set.split, &set.enhanced_dir, set.clean_dir.as_deref(), jobs)?;
            for (id, _, _) in &report.missing {
                warn!("no enhanced file for {id}");
            }
            emit(set.out.as_deref(), &report.to_csv())?;
            Ok(report.is_complete())
        }
        Command::DistortionProfile { set } => {
            let manifest = Manifest::read(&set.manifest)?;
            let (profile, missing) = pipeline::distortion_profile(
                &cfg,
                &manifest,
                set.split,
                &set.enhanced_dir,
                set.clean_dir.as_deref(),
                jobs,
            )?;
            for id in &missing {
                warn!("no enhanced file for {id}");
            }
            emit(set.out.as_deref(), &profile.to_csv())?;
            Ok(missing.is_empty())
        }
        Command::DumpDefaults => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPECJOINT_LOG", "info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            error!("finished with errors");
            ExitCode::from(3)
        }
        Err(e) => {
            error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}
