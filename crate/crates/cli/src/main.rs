//! `clusterduel` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 1 anything
//! else. Log verbosity comes from `RUST_LOG` (default `warn`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use clusterduel::config::ExperimentConfig;
use clusterduel::experiment::{self, Dataset};
use clusterduel::policies::PolicyId;
use clusterduel::{Error, ErrorKind};

#[derive(Parser)]
#[command(
    name = "clusterduel",
    version,
    about = "Replay simulator for clustered dueling-bandit slate policies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay one policy and write report, series and manifest.
    Run(RunArgs),
    /// Replay every configured policy, k and seed on the same stream.
    Compare(RunArgs),
    /// Write a synthetic interaction log.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Interaction CSV; overrides `data.path`.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    policy: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    /// File holding a `[synthetic]` table (or a bare spec).
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the synthetic generator seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn load_config(args: &RunArgs, compare: bool) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(p) = &args.policy {
        let policy: PolicyId = p.parse()?;
        config.engine.policy = policy;
        if compare {
            config.compare.policies = vec![policy];
        }
    }
    if let Some(k) = args.k {
        config.engine.k = k;
        if compare {
            config.compare.k_values = vec![k];
        }
    }
    if let Some(seed) = args.seed {
        config.engine.seed = seed;
        if compare {
            config.compare.seeds = vec![seed];
        }
    }
    config.validate()?;
    Ok(config)
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run(args) => {
            let config = load_config(&args, false)?;
            let data = Dataset::load(&config, args.data.as_deref())?;
            let out = experiment::run(&config, Some(&args.config), &data, &args.out)?;
            println!(
                "{} k={} seed={} avg_ctr={:.6} precision_at_k={:.6}",
                config.engine.policy,
                config.engine.k,
                config.engine.seed,
                out.report.avg_ctr,
                out.report.precision_at_k
            );
            println!("{}", out.report_path.display());
            println!("{}", out.series_path.display());
            println!("{}", out.manifest_path.display());
        }
        Command::Compare(args) => {
            let config = load_config(&args, true)?;
            let data = Dataset::load(&config, args.data.as_deref())?;
            let out = experiment::compare(&config, Some(&args.config), &data, &args.out)?;
            for row in out.rows.iter().filter(|r| r.seed == "median") {
                println!(
                    "{:<14} k={} median avg_ctr={:.6} precision_at_k={:.6} candidates={:.2}",
                    row.policy.as_str(),
                    row.k,
                    row.avg_ctr,
                    row.precision_at_k,
                    row.mean_candidates_scored
                );
            }
            println!("{}", out.table_path.display());
        }
        Command::Synth(args) => {
            let mut spec = experiment::load_synthetic_spec(&args.config)?;
            if let Some(seed) = args.seed {
                spec.seed = seed;
            }
            let digest = experiment::synth(&spec, args.n, &args.out)?;
            println!("{} sha256={digest}", args.out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            log::debug!("{e:?}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Other => 1,
            })
        }
    }
}
