use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use stackrl::estimators::Adversary;
use stackrl::harness::{
    alpha_sweep, default_alphas, dump_trajectories, eval_sweep, render_table, resolve_out_dir, run_selftest, train_all,
    AlphaSetting, Checkpoint, GameConfig, SweepSpec,
};

#[derive(Parser)]
#[command(name = "stackrl", version, about = "Stackelberg robust RL experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a config; writes train_seed<k>.csv and checkpoint_seed<k>.txt.
    Train {
        config: PathBuf,
        /// Output directory (overridden by STACKRL_OUT_DIR).
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Evaluate checkpoints with the perturbation pinned to each sweep value.
    Eval {
        #[arg(required = true)]
        checkpoints: Vec<PathBuf>,
        /// `param=lo..hi[:step]`; defaults to the environment's standard sweep.
        #[arg(long)]
        sweep: Option<String>,
        /// Episodes per sweep value; defaults to the config's eval_episodes.
        #[arg(long)]
        episodes: Option<usize>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Train and evaluate one run set per α (Stack-PG only).
    AlphaSweep {
        config: PathBuf,
        /// Comma-separated α values.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        /// Also run MGDA α tuning.
        #[arg(long)]
        auto: bool,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Run the analytic self-checks and print a pass/fail table.
    Selftest,
    /// Dump rollouts of a checkpoint as CSV.
    DumpTraj {
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        /// Pin the adversary to this action instead of its learned policy.
        #[arg(long)]
        fixed: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train { config, out } => {
            let cfg = GameConfig::from_path(&config)?;
            let dir = resolve_out_dir(&out);
            for run in train_all(&cfg, &dir)? {
                let last = run.rows.last().map_or(f64::NAN, |r| r.eval_return_no_adv);
                eprintln!("seed {}: {} iterations, final eval return {last:.3}", run.seed, run.rows.len());
            }
            eprintln!("wrote {}", dir.display());
        }
        Command::Eval { checkpoints, sweep, episodes, output } => {
            let loaded = checkpoints.iter().map(|p| Checkpoint::load(p)).collect::<stackrl::Result<Vec<_>>>()?;
            let first = &loaded[0];
            if let Some(other) = loaded.iter().find(|c| c.config_hash != first.config_hash) {
                bail!("checkpoints come from different configs (seed {} vs seed {})", first.seed, other.seed);
            }
            let cfg = &first.config;
            let spec = match sweep {
                Some(s) => SweepSpec::parse(&s)?,
                None => cfg.sweep_spec()?.context("environment has no sweep parameter")?,
            };
            let env = cfg.env.build()?;
            let pros: Vec<_> = loaded.iter().map(|c| (c.seed, &c.state.pro)).collect();
            let report = eval_sweep(env.as_ref(), &spec, &pros, episodes.unwrap_or(cfg.eval_episodes))?;
            emit(&report.to_csv(&first.config_hash), output.as_deref())?;
        }
        Command::AlphaSweep { config, alphas, auto, out } => {
            let cfg = GameConfig::from_path(&config)?;
            let mut settings: Vec<AlphaSetting> =
                alphas.unwrap_or_else(default_alphas).into_iter().map(AlphaSetting::Fixed).collect();
            if let Some(bad) = settings.iter().find(|s| matches!(s, AlphaSetting::Fixed(a) if !(0.0..=1.0).contains(a))) {
                bail!("alpha {} is outside [0, 1]", bad.label());
            }
            if auto {
                settings.push(AlphaSetting::Auto);
            }
            let dir = resolve_out_dir(&out);
            for (setting, report) in alpha_sweep(&cfg, &settings, &dir)? {
                eprintln!("alpha {:>5}: mean over sweep {:.3}", setting.label(), report.sweep_mean());
            }
            eprintln!("wrote {}", dir.join("alpha_sweep.csv").display());
        }
        Command::Selftest => {
            let results = run_selftest();
            print!("{}", render_table(&results));
            return Ok(results.iter().all(|r| r.passed));
        }
        Command::DumpTraj { checkpoint, episodes, fixed, output } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let env = ck.config.env.build()?;
            let adv = match fixed {
                Some(a) => Adversary::Fixed(a),
                None => Adversary::Policy(&ck.state.adv),
            };
            let csv = dump_trajectories(env.as_ref(), &ck.state.pro, adv, episodes, ck.seed, &ck.config_hash)?;
            emit(&csv, output.as_deref())?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
