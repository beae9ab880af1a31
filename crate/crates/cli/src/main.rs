use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Parser, Subcommand};
use sfl_cli::config::RunConfig;
use sfl_cli::plot::PlotKind;
use sfl_cli::{analyze, evaluate, levels, plot, train};

/// Learnability-driven curricula for navigation agents.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train one policy per configured seed.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Evaluate checkpoints.
    Eval {
        #[command(subcommand)]
        protocol: EvalCmd,
    },
    /// Write random levels in the level text format.
    GenLevels {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Only levels whose goals are reachable.
        #[arg(long)]
        solvable: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlate score functions with success rate for a checkpoint.
    AnalyzeScores {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 2500)]
        levels: usize,
        /// Steps rolled out per level.
        #[arg(long, default_value_t = 512)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate results into plot-ready CSV (mean and standard error).
    PlotData {
        #[arg(long, value_enum)]
        kind: PlotKind,
        /// Dotted metrics field for training curves.
        #[arg(long, default_value = "success_rate")]
        field: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Subcommand)]
enum EvalCmd {
    /// CVaR of success over sampled solvable levels.
    Cvar {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Success rate on hand-written level files.
    Testset {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        levels: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// 10 x 10 domination heatmap of two checkpoints.
    HeatmapPair {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        checkpoint_a: PathBuf,
        #[arg(long)]
        checkpoint_b: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(config: Option<&Path>) -> Result<RunConfig> {
    config.map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Train { config } => {
            let cfg = RunConfig::load(&config)?;
            for s in train::run_train(&cfg)? {
                let last = s.records.last();
                eprintln!(
                    "seed {}: {} batches, final batch success {:?}, artifacts in {}",
                    s.seed,
                    s.records.len(),
                    last.and_then(|r| r.success_rate),
                    s.dir.display()
                );
            }
        }
        Cmd::Eval { protocol } => match protocol {
            EvalCmd::Cvar { config, checkpoint, seed, out } => {
                let r = evaluate::eval_cvar(&load(config.as_deref())?, &checkpoint, seed, &out)?;
                for (a, v) in &r.cvar_by_alpha {
                    println!("alpha {a}: {v:.4}");
                }
                println!("mean success: {:.4}", r.mean_success);
            }
            EvalCmd::Testset { config, checkpoint, levels, seed, out } => {
                let rates = evaluate::eval_testset(&load(config.as_deref())?, &checkpoint, &levels, seed, &out)?;
                println!(
                    "{} levels, mean success {:.4}",
                    rates.len(),
                    rates.iter().sum::<f64>() / rates.len().max(1) as f64
                );
            }
            EvalCmd::HeatmapPair { config, checkpoint_a, checkpoint_b, seed, out } => {
                let g =
                    evaluate::eval_heatmap_pair(&load(config.as_deref())?, &checkpoint_a, &checkpoint_b, seed, &out)?;
                println!("{} levels binned into {}", g.total(), out.join("heatmap.csv").display());
            }
        },
        Cmd::GenLevels { config, count, solvable, seed, out } => {
            levels::write_levels(&load(config.as_deref())?, count, solvable, seed, &out)?;
        }
        Cmd::AnalyzeScores { config, checkpoint, levels, steps, seed, out } => {
            let a = analyze::analyze_scores(&load(config.as_deref())?, &checkpoint, levels, steps, seed, &out)?;
            for (name, c) in &a.correlations {
                match c {
                    Some(c) => println!("{name}: r = {:.3}, p = {:.3e}", c.r, c.p_value),
                    None => println!("{name}: undefined"),
                }
            }
        }
        Cmd::PlotData { kind, field, out, inputs } => plot::write_plot_data(kind, &inputs, &field, &out)?,
    }
    Ok(())
}
