use rand::seq::SliceRandom;

use super::buffer::BufferEntry;
use super::score::{learnability, ScoreFunction};
use crate::env::Environment;
use crate::rng::{fork, SimRng};
use crate::rollout::{collect_rollout, LevelOutcomeStats, Policy};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ScoredLevel<L> {
    pub level: L,
    pub score: f64,
    /// Success rate over completed episodes; `None` if none completed.
    pub success: Option<f64>,
    pub stats: LevelOutcomeStats,
}

impl<L> ScoredLevel<L> {
    pub fn into_entry(self, update_counter: u64) -> BufferEntry<L> {
        BufferEntry {
            level: self.level,
            score: self.score,
            last_sampled: update_counter,
            max_return: self.stats.max_return.unwrap_or(f64::NEG_INFINITY),
            success: self.success,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SflCollection<L> {
    /// The top-K levels, best first.
    pub selected: Vec<ScoredLevel<L>>,
    /// Mean score over all N sampled levels.
    pub pool_mean_score: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct CollectSpec {
    pub n_levels: usize,
    pub rollout_steps: usize,
    pub keep: usize,
    pub score: ScoreFunction,
    pub solvable_only: bool,
    /// Environments rolled out together; bounds memory, not results.
    pub chunk_envs: usize,
    pub gamma: f64,
}

/// Samples `n_levels` levels, rolls the policy on each for `rollout_steps`
/// steps with auto-reset, scores each from its completed episodes (0 when
/// none completed) and keeps the `keep` best, ties broken at random.
pub fn sfl_collect<E: Environment, P: Policy>(
    env: &E,
    policy: &P,
    spec: &CollectSpec,
    rng: &mut SimRng,
) -> Result<SflCollection<E::Level>> {
    if spec.keep == 0 || spec.keep > spec.n_levels {
        return Err(Error::Argument(format!("need N >= K >= 1, got N = {}, K = {}", spec.n_levels, spec.keep)));
    }
    if !spec.score.uses_outcomes() {
        return Err(Error::Argument(format!("{:?} is not a success-rate score", spec.score)));
    }
    let levels: Vec<E::Level> = (0..spec.n_levels)
        .map(|_| if spec.solvable_only { env.sample_solvable_level(rng) } else { env.sample_level(rng) })
        .collect::<Result<_>>()?;
    score_levels(env, policy, levels, spec, rng)
}

/// Scores and ranks a given pool as [`sfl_collect`] does.
pub fn score_levels<E: Environment, P: Policy>(
    env: &E,
    policy: &P,
    levels: Vec<E::Level>,
    spec: &CollectSpec,
    rng: &mut SimRng,
) -> Result<SflCollection<E::Level>> {
    let mut stats = Vec::with_capacity(levels.len());
    for chunk in levels.chunks(spec.chunk_envs.max(1)) {
        let mut r = fork(rng);
        stats.extend(collect_rollout(env, policy, chunk, spec.rollout_steps, spec.gamma, false, &mut r)?.stats);
    }
    let mut scored: Vec<ScoredLevel<E::Level>> = levels
        .into_iter()
        .zip(stats)
        .map(|(level, stats)| {
            let score = if stats.episodes == 0 { 0.0 } else { learnability(&stats, spec.score)? };
            Ok(ScoredLevel { level, score, success: stats.success_rate(), stats })
        })
        .collect::<Result<_>>()?;
    let pool_mean_score = scored.iter().map(|s| s.score).sum::<f64>() / scored.len().max(1) as f64;
    scored.shuffle(rng);
    scored.sort_by(|a, b| b.score.total_cmp(&a.score));
    scored.truncate(spec.keep);
    Ok(SflCollection { selected: scored, pool_mean_score })
}
