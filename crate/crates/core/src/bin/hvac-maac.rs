use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hvac_maac::cli::{self, ExperimentConfig};
use hvac_maac::Result;

/// HVAC control experiments: traces, training, evaluation, baselines and sweeps.
#[derive(Parser)]
#[command(name = "hvac-maac", version)]
struct Args {
    /// Experiment configuration (key = value). Without it the built-in
    /// four-zone synthetic experiment is used.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run only this seed instead of the configured seed list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured traces as CSV under <out>/traces.
    Synth,
    /// Train agents and write checkpoint, training log and reward curve.
    Train,
    /// Run a trained checkpoint greedily on the held-out window.
    Eval,
    /// Compare the learned policy with the rule-based and heuristic schemes.
    Compare,
    /// Train and evaluate over the alpha/beta grid.
    Sweep,
}

fn run(args: Args) -> Result<()> {
    let mut config = match &args.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::synthetic(),
    };
    if let Some(out) = args.out {
        config.out_dir = out;
    }
    if let Some(seed) = args.seed {
        config.seeds = vec![seed];
    }
    match args.command {
        Command::Synth => {
            let paths = cli::cmd_synth(&config)?;
            println!("wrote {}, {}, {}", paths.price.display(), paths.weather.display(), paths.occupancy.display());
        }
        Command::Train => {
            for &seed in &config.seeds {
                let every = (config.train.episodes / 10).max(1);
                let art = cli::cmd_train_with_progress(&config, seed, &mut |ep, log| {
                    if (ep + 1) % every == 0 {
                        let team = log.team_sums();
                        eprintln!("seed {seed} episode {}/{}: reward {:.2}", ep + 1, config.train.episodes, team[ep]);
                    }
                })?;
                println!("seed {seed}: wrote {}", art.dir.display());
            }
        }
        Command::Eval => {
            println!("seed,tec,atd,acd");
            for &seed in &config.seeds {
                let m = cli::cmd_eval(&config, seed)?;
                println!("{seed},{:.3},{:.4},{:.3}", m.tec, m.atd, m.acd);
            }
        }
        Command::Compare => {
            let report = cli::cmd_compare(&config)?;
            println!("scheme,metric,n,mean,half_width");
            for r in &report.summary {
                let i = &r.interval;
                let width = if i.degenerate { "degenerate".to_string() } else { format!("{:.4}", i.half_width) };
                println!("{},{},{},{:.4},{width}", r.scheme, r.metric, i.n, i.mean);
            }
        }
        Command::Sweep => {
            let rows = cli::cmd_sweep(&config)?;
            println!("wrote {} rows to {}", rows.len(), config.out_dir.join("sweep/results.csv").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
