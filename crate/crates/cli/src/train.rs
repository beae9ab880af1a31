//! Training loop: scheduler → rollouts → PPO, with per-batch JSONL metrics.
//!
//! `metrics.jsonl` holds only seed-determined quantities, so two runs with
//! the same seed produce identical bytes; wall-clock times go to the
//! `timing.jsonl` sidecar, keyed by the same (seed, batch) pair.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sfl_core::curricula::{learnability, BatchKind, BufferSummary, RefreshInfo, Scheduler, ScoreFunction};
use sfl_core::env::{ActionSpace, Environment};
use sfl_core::eval::cvar_success;
use sfl_core::learner::{ppo_update, save_checkpoint, HeadKind, NetShape, PolicyParams, PpoStats};
use sfl_core::rng::stream;
use sfl_core::rollout::{collect_rollout, LevelOutcomeStats, NetPolicy};

use crate::config::RunConfig;

/// Builds the environment selected by `gen.env_kind` and binds it to `$env`.
#[macro_export]
macro_rules! with_env {
    ($cfg:expr, $env:ident => $body:expr) => {
        match $cfg.gen.env_kind {
            sfl_core::level::EnvKind::Gridmaze => {
                let $env = sfl_core::env::GridMazeEnv::new($cfg.maze.clone(), $cfg.gen.clone())?;
                $body
            }
            sfl_core::level::EnvKind::Jaxnav => {
                let $env = sfl_core::env::JaxNavEnv::new($cfg.nav.clone(), $cfg.gen.clone())?;
                $body
            }
        }
    };
}

pub fn network_shape<E: Environment>(env: &E, hidden: usize) -> NetShape {
    let head = match env.action_space() {
        ActionSpace::Discrete(n) => HeadKind::Discrete(n),
        ActionSpace::Continuous { low, .. } => HeadKind::Continuous(low.len()),
    };
    NetShape { obs_dim: env.obs_dim(), hidden, head }
}

#[derive(Clone, Debug, Serialize)]
pub struct EvalSummary {
    pub mean_success: f64,
    pub cvar: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricsRecord {
    pub seed: u64,
    /// Gradient updates completed after this batch.
    pub update: u64,
    pub batch: u64,
    pub kind: BatchKind,
    pub gradient: bool,
    pub ppo: Option<PpoStats>,
    /// Completed episodes in the batch rollout.
    pub episodes: usize,
    pub success_rate: Option<f64>,
    pub mean_return: Option<f64>,
    /// Learnability and success of the batch's levels, over levels with at
    /// least one completed episode.
    pub batch_learnability: Option<f64>,
    pub batch_success: Option<f64>,
    pub buffer: BufferSummary,
    pub refresh: Option<RefreshInfo>,
    pub eval: Option<EvalSummary>,
}

#[derive(Serialize)]
struct TimingRecord {
    seed: u64,
    batch: u64,
    wall_s: f64,
}

pub struct SeedOutcome {
    pub seed: u64,
    pub dir: PathBuf,
    pub params: PolicyParams,
    pub records: Vec<MetricsRecord>,
}

pub fn seed_dir(out_dir: &Path, seed: u64) -> PathBuf {
    out_dir.join(format!("seed_{seed}"))
}

/// Trains every configured seed; artifacts go to `out_dir/seed_<s>/`.
pub fn run_train(cfg: &RunConfig) -> Result<Vec<SeedOutcome>> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("config.toml"), cfg.to_toml()?)?;
    cfg.seeds
        .iter()
        .map(|&seed| with_env!(cfg, env => train_seed(&env, cfg, seed, &seed_dir(&cfg.out_dir, seed))))
        .collect()
}

fn level_summary(stats: &[LevelOutcomeStats]) -> (usize, Option<f64>, Option<f64>, Option<f64>, Option<f64>) {
    let mut total = LevelOutcomeStats::new(0);
    let (mut learn, mut succ, mut seen) = (0.0, 0.0, 0usize);
    for s in stats {
        total.episodes += s.episodes;
        total.successes += s.successes;
        total.return_sum += s.return_sum;
        if let Some(p) = s.success_rate() {
            learn += learnability(s, ScoreFunction::Learnability).unwrap_or(0.0);
            succ += p;
            seen += 1;
        }
    }
    let per_level = |x: f64| (seen > 0).then(|| x / seen as f64);
    (total.episodes, total.success_rate(), total.mean_return(), per_level(learn), per_level(succ))
}

pub fn train_seed<E: Environment>(env: &E, cfg: &RunConfig, seed: u64, dir: &Path) -> Result<SeedOutcome> {
    fs::create_dir_all(dir)?;
    let mut metrics = BufWriter::new(File::create(dir.join("metrics.jsonl"))?);
    let mut timing = BufWriter::new(File::create(dir.join("timing.jsonl"))?);
    let ppo = &cfg.ppo;
    let mut params = PolicyParams::init(network_shape(env, ppo.hidden), &mut stream(seed, &[0]));
    let mut scheduler = Scheduler::new(cfg.scheduler.clone(), ppo.gamma, ppo.gae_lambda)?;
    let mut sched_rng = stream(seed, &[1]);
    let mut records = Vec::new();
    let start = Instant::now();
    let mut batch = 0u64;

    while scheduler.updates() < cfg.updates {
        let plan = {
            let policy = NetPolicy::new(&params, env.action_space())?;
            scheduler.next_batch(env, &policy, &mut sched_rng)?
        };
        let rollout = {
            let policy = NetPolicy::new(&params, env.action_space())?;
            collect_rollout(env, &policy, &plan.levels, ppo.n_steps, ppo.gamma, true, &mut stream(seed, &[2, batch]))?
        };
        scheduler.observe(&plan, &rollout)?;

        let mut stats = None;
        if plan.apply_gradients {
            let lr = ppo.lr_at(scheduler.updates(), cfg.updates);
            match ppo_update(&params, &rollout.batch, ppo, lr, &mut stream(seed, &[3, batch])) {
                Ok((next, s)) => {
                    params = next;
                    stats = Some(s);
                }
                Err(e) => {
                    let path = dir.join("last_good.ckpt");
                    save_checkpoint(&params, &path)?;
                    metrics.flush()?;
                    return Err(e).with_context(|| {
                        format!("update {} failed; last good state saved to {}", scheduler.updates(), path.display())
                    });
                }
            }
            scheduler.on_update();
        }
        let update = scheduler.updates();

        let mut eval = None;
        if stats.is_some() && cfg.eval_every > 0 && (update % cfg.eval_every == 0 || update == cfg.updates) {
            let policy = NetPolicy::new(&params, env.action_space())?;
            let e = &cfg.eval;
            let report = cvar_success(
                env,
                &policy,
                e.n_levels,
                &e.alphas,
                e.episodes,
                e.chunk_envs,
                seed,
                &mut stream(seed, &[4, update]),
            )?;
            eval = Some(EvalSummary { mean_success: report.mean_success, cvar: report.cvar_by_alpha });
        }
        if stats.is_some() && cfg.checkpoint_every > 0 && update % cfg.checkpoint_every == 0 {
            save_checkpoint(&params, &dir.join(format!("update_{update}.ckpt")))?;
        }

        let (episodes, success_rate, mean_return, batch_learnability, batch_success) = level_summary(&rollout.stats);
        let rec = MetricsRecord {
            seed,
            update,
            batch,
            kind: plan.kind,
            gradient: plan.apply_gradients,
            ppo: stats,
            episodes,
            success_rate,
            mean_return,
            batch_learnability,
            batch_success,
            buffer: scheduler.buffer_summary(),
            refresh: plan.refreshed,
            eval,
        };
        serde_json::to_writer(&mut metrics, &rec)?;
        metrics.write_all(b"\n")?;
        serde_json::to_writer(&mut timing, &TimingRecord { seed, batch, wall_s: start.elapsed().as_secs_f64() })?;
        timing.write_all(b"\n")?;
        records.push(rec);
        batch += 1;
    }

    metrics.flush()?;
    timing.flush()?;
    save_checkpoint(&params, &dir.join("final.ckpt"))?;
    let buffer = BufWriter::new(File::create(dir.join("buffer.jsonl"))?);
    scheduler.buffer().export_jsonl(buffer, |l| env.level_text(l))?;
    Ok(SeedOutcome { seed, dir: dir.to_path_buf(), params, records })
}
