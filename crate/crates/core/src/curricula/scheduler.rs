//! Level schedulers. A training loop calls [`Scheduler::next_batch`], rolls
//! the policy on the returned levels, reports the rollout back through
//! [`Scheduler::observe`] and, if the plan allowed it and a gradient step was
//! taken, calls [`Scheduler::on_update`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::buffer::{BufferSummary, Prioritization, ScoredLevelBuffer};
use super::score::{env_values, learnability, score_l1, score_maxmc, score_pvl, ScoreFunction};
use super::sfl::{sfl_collect, CollectSpec};
use crate::env::Environment;
use crate::rng::SimRng;
use crate::rollout::{Policy, Rollout};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dr,
    Plr,
    RobustPlr,
    Accel,
    RobustAccel,
    Sfl,
    PerfectRegret,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Dr,
        Method::Plr,
        Method::RobustPlr,
        Method::Accel,
        Method::RobustAccel,
        Method::Sfl,
        Method::PerfectRegret,
    ];

    fn is_robust(self) -> bool {
        matches!(self, Method::RobustPlr | Method::RobustAccel)
    }

    fn edits(self) -> bool {
        matches!(self, Method::Accel | Method::RobustAccel)
    }

    fn replays(self) -> bool {
        matches!(self, Method::Plr | Method::RobustPlr | Method::Accel | Method::RobustAccel)
    }

    fn collects(self) -> bool {
        matches!(self, Method::Sfl | Method::PerfectRegret)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SflConfig {
    /// Levels sampled per refresh (N).
    pub n_levels: usize,
    /// Steps rolled out on each sampled level (L).
    pub rollout_steps: usize,
    /// Levels kept (K).
    pub buffer_size: usize,
    /// Policy updates between refreshes (T).
    pub refresh_every: u64,
    /// Fraction of each batch drawn from the buffer (ρ).
    pub replay_fraction: f64,
    pub score: ScoreFunction,
    pub chunk_envs: usize,
}

impl Default for SflConfig {
    fn default() -> Self {
        Self {
            n_levels: 5000,
            rollout_steps: 2000,
            buffer_size: 1000,
            refresh_every: 50,
            replay_fraction: 0.5,
            score: ScoreFunction::Learnability,
            chunk_envs: 1024,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    pub method: Method,
    /// Levels per training batch (N_L), one environment each.
    pub batch_levels: usize,
    pub replay_rate: f64,
    pub buffer_size: usize,
    pub prioritization: Prioritization,
    pub staleness_coef: f64,
    pub score: ScoreFunction,
    pub n_edits: usize,
    pub sfl: SflConfig,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        Self {
            method: Method::Dr,
            batch_levels: 256,
            replay_rate: 0.5,
            buffer_size: 1000,
            prioritization: Prioritization::TopK { k: 32 },
            staleness_coef: 0.3,
            score: ScoreFunction::Maxmc,
            n_edits: 5,
            sfl: SflConfig::default(),
        }
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        let arg = |m: String| Err(Error::Argument(m));
        if self.batch_levels == 0 {
            return arg("batch_levels must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.replay_rate) {
            return arg(format!("replay_rate must lie in [0, 1], got {}", self.replay_rate));
        }
        let s = &self.sfl;
        if !(0.0..=1.0).contains(&s.replay_fraction) {
            return arg(format!("sfl.replay_fraction must lie in [0, 1], got {}", s.replay_fraction));
        }
        if s.refresh_every == 0 || s.buffer_size == 0 || s.buffer_size > s.n_levels || s.chunk_envs == 0 {
            return arg("sfl needs refresh_every >= 1, chunk_envs >= 1 and n_levels >= buffer_size >= 1".into());
        }
        if !s.score.uses_outcomes() {
            return arg(format!("sfl.score must be success-rate based, got {:?}", s.score));
        }
        self.score.validate()?;
        s.score.validate()?;
        ScoredLevelBuffer::<()>::new(self.buffer_size, self.prioritization, self.staleness_coef)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchKind {
    /// Freshly generated levels.
    Random,
    /// Prioritized draws from the buffer.
    Replay,
    /// Mutated children of the previous replay batch.
    Edit,
    /// Buffer draws mixed with random levels.
    Curated,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RefreshInfo {
    pub update: u64,
    pub mean_score: f64,
    pub pool_mean_score: f64,
    pub mean_success: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct BatchPlan<L> {
    pub levels: Vec<L>,
    pub apply_gradients: bool,
    pub kind: BatchKind,
    /// Set when this call refreshed the learnability buffer.
    pub refreshed: Option<RefreshInfo>,
}

pub struct Scheduler<L> {
    cfg: SchedulerConfig,
    gamma: f64,
    lambda: f64,
    buffer: ScoredLevelBuffer<L>,
    updates: u64,
    last_refresh: Option<u64>,
    edit_parents: Option<Vec<L>>,
}

impl<L: Clone + PartialEq> Scheduler<L> {
    /// `gamma` and `lambda` are the discount and GAE parameters used for
    /// value-based scores and episode returns.
    pub fn new(cfg: SchedulerConfig, gamma: f64, lambda: f64) -> Result<Self> {
        cfg.validate()?;
        let buffer = if cfg.method.collects() {
            ScoredLevelBuffer::new(cfg.sfl.buffer_size, Prioritization::TopK { k: cfg.sfl.buffer_size }, 0.0)?
        } else {
            ScoredLevelBuffer::new(cfg.buffer_size, cfg.prioritization, cfg.staleness_coef)?
        };
        Ok(Self { cfg, gamma, lambda, buffer, updates: 0, last_refresh: None, edit_parents: None })
    }

    pub fn config(&self) -> &SchedulerConfig {
        &self.cfg
    }

    pub fn buffer(&self) -> &ScoredLevelBuffer<L> {
        &self.buffer
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn buffer_summary(&self) -> BufferSummary {
        self.buffer.summary()
    }

    pub fn on_update(&mut self) {
        self.updates += 1;
    }

    pub fn next_batch<E, P>(&mut self, env: &E, policy: &P, rng: &mut SimRng) -> Result<BatchPlan<L>>
    where
        E: Environment<Level = L>,
        P: Policy,
    {
        let n = self.cfg.batch_levels;
        let method = self.cfg.method;
        let random = |rng: &mut SimRng, k: usize| -> Result<Vec<L>> {
            (0..k)
                .map(|_| {
                    if method == Method::PerfectRegret {
                        env.sample_solvable_level(rng)
                    } else {
                        env.sample_level(rng)
                    }
                })
                .collect()
        };

        if method == Method::Dr {
            return Ok(BatchPlan {
                levels: random(rng, n)?,
                apply_gradients: true,
                kind: BatchKind::Random,
                refreshed: None,
            });
        }

        if method.collects() {
            let mut refreshed = None;
            if self.updates.is_multiple_of(self.cfg.sfl.refresh_every) && self.last_refresh != Some(self.updates) {
                refreshed = Some(self.refresh(env, policy, rng)?);
            }
            let from_buffer = (self.cfg.sfl.replay_fraction * n as f64).ceil() as usize;
            let mut levels = Vec::with_capacity(n);
            for _ in 0..from_buffer.min(n) {
                levels.push(self.buffer.sample_uniform(rng)?);
            }
            levels.extend(random(rng, n - levels.len())?);
            return Ok(BatchPlan { levels, apply_gradients: true, kind: BatchKind::Curated, refreshed });
        }

        let explore_grads = !method.is_robust();
        if let Some(parents) = self.edit_parents.take() {
            let levels = parents.iter().map(|l| env.mutate(l, self.cfg.n_edits, rng)).collect();
            return Ok(BatchPlan { levels, apply_gradients: explore_grads, kind: BatchKind::Edit, refreshed: None });
        }
        let replay = rng.random::<f64>() < self.cfg.replay_rate && self.buffer.len() >= n.min(self.buffer.capacity());
        if replay {
            let levels: Vec<L> = (0..n).map(|_| self.buffer.sample(rng, self.updates)).collect::<Result<_>>()?;
            if method.edits() {
                self.edit_parents = Some(levels.clone());
            }
            return Ok(BatchPlan { levels, apply_gradients: true, kind: BatchKind::Replay, refreshed: None });
        }
        Ok(BatchPlan {
            levels: random(rng, n)?,
            apply_gradients: explore_grads,
            kind: BatchKind::Random,
            refreshed: None,
        })
    }

    fn refresh<E, P>(&mut self, env: &E, policy: &P, rng: &mut SimRng) -> Result<RefreshInfo>
    where
        E: Environment<Level = L>,
        P: Policy,
    {
        let s = &self.cfg.sfl;
        let perfect = self.cfg.method == Method::PerfectRegret;
        let spec = CollectSpec {
            n_levels: s.n_levels,
            rollout_steps: s.rollout_steps,
            keep: s.buffer_size,
            score: if perfect { ScoreFunction::PerfectRegret } else { s.score },
            solvable_only: perfect,
            chunk_envs: s.chunk_envs,
            gamma: self.gamma,
        };
        let got = sfl_collect(env, policy, &spec, rng)?;
        let pool_mean_score = got.pool_mean_score;
        let entries = got.selected.into_iter().map(|s| s.into_entry(self.updates)).collect();
        self.buffer.replace_all(entries);
        self.last_refresh = Some(self.updates);
        let summary = self.buffer.summary();
        Ok(RefreshInfo {
            update: self.updates,
            mean_score: summary.mean_score.unwrap_or(0.0),
            pool_mean_score,
            mean_success: summary.mean_success,
        })
    }

    /// Feeds the rollout of a planned batch back into the buffer. Only the
    /// replay-based methods keep per-level scores; the rest ignore this.
    pub fn observe(&mut self, plan: &BatchPlan<L>, rollout: &Rollout) -> Result<()> {
        if !self.cfg.method.replays() {
            return Ok(());
        }
        if rollout.stats.len() != plan.levels.len() {
            return Err(Error::Arity { what: "rollout levels", expected: plan.levels.len(), got: rollout.stats.len() });
        }
        let value_scores = match self.cfg.score {
            ScoreFunction::Pvl => Some(score_pvl(&rollout.batch, self.gamma, self.lambda)?),
            ScoreFunction::L1 => Some(score_l1(&rollout.batch, self.gamma, self.lambda)?),
            _ => None,
        };
        for (i, (level, stats)) in plan.levels.iter().zip(&rollout.stats).enumerate() {
            let observed = stats.max_return.unwrap_or(f64::NEG_INFINITY);
            let score = match (self.cfg.score, &value_scores) {
                (_, Some(v)) => v[i],
                (ScoreFunction::Maxmc, _) => {
                    let values = env_values(&rollout.batch, i);
                    let stored = self.buffer.get(level).map_or(f64::NEG_INFINITY, |e| e.max_return);
                    let mut r_max = stored.max(observed);
                    if !r_max.is_finite() {
                        // nothing finished yet: fall back to the most optimistic estimate
                        r_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    }
                    if r_max.is_finite() {
                        score_maxmc(&values, r_max)
                    } else {
                        0.0
                    }
                }
                (f, _) if stats.episodes > 0 => learnability(stats, f)?,
                _ => 0.0,
            };
            self.buffer.update_with(level.clone(), score, observed, stats.success_rate(), self.updates)?;
        }
        Ok(())
    }
}
