//! Level scores: value-error regret proxies and success-rate based scores.

use serde::{Deserialize, Serialize};

use crate::learner::{gae_lane, RolloutBatch};
use crate::rollout::LevelOutcomeStats;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScoreFunction {
    Pvl,
    Maxmc,
    L1,
    Learnability,
    /// Piecewise quadratic, zero at 0 and 1, peak 0.25 at `c`.
    LearnabilityPeak {
        c: f64,
    },
    Uniform01,
    Linear0,
    Linear1,
    PerfectRegret,
}

impl ScoreFunction {
    pub fn validate(&self) -> Result<()> {
        if let ScoreFunction::LearnabilityPeak { c } = *self {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::Argument(format!("learnability peak must lie in (0, 1), got {c}")));
            }
        }
        Ok(())
    }

    /// Whether the score is a function of episode success rates alone.
    pub fn uses_outcomes(&self) -> bool {
        !matches!(self, ScoreFunction::Pvl | ScoreFunction::Maxmc | ScoreFunction::L1)
    }

    /// Single-agent score for success rate `p`. Only meaningful when
    /// [`uses_outcomes`](Self::uses_outcomes) holds; value-based kinds give 0.
    pub fn of_rate(&self, p: f64) -> f64 {
        let interior = p > 0.0 && p < 1.0;
        match *self {
            ScoreFunction::Learnability => p * (1.0 - p),
            ScoreFunction::LearnabilityPeak { c } => {
                let w = if p <= c { c } else { 1.0 - c };
                let z = (p - c) / w;
                (0.25 * (1.0 - z * z)).max(0.0)
            }
            ScoreFunction::Uniform01 => f64::from(u8::from(interior)),
            ScoreFunction::Linear0 if interior => 1.0 - p,
            ScoreFunction::Linear1 if interior => p,
            ScoreFunction::PerfectRegret => 1.0 - p,
            _ => 0.0,
        }
    }
}

/// Outcome score summed over agents; learnability is `Σᵢ pᵢ(1 − pᵢ)`.
pub fn learnability(stats: &LevelOutcomeStats, variant: ScoreFunction) -> Result<f64> {
    let rates = stats.agent_rates().ok_or(Error::UndefinedScore("no completed episodes"))?;
    Ok(rates.iter().map(|&p| variant.of_rate(p)).sum())
}

/// Valid (unmasked) steps of one lane, ready for the GAE recursion.
struct Lane {
    rewards: Vec<f64>,
    values: Vec<f64>,
    dones: Vec<bool>,
    bootstrap: f64,
}

fn lanes_of_env(batch: &RolloutBatch, env: usize) -> Vec<Lane> {
    let a = batch.agents_per_env;
    (env * a..(env + 1) * a)
        .map(|lane| {
            let mut l =
                Lane { rewards: vec![], values: vec![], dones: vec![], bootstrap: batch.bootstrap_values[lane] };
            for t in 0..batch.n_steps {
                let i = batch.idx(t, lane);
                if batch.masks[i] {
                    l.rewards.push(batch.rewards[i]);
                    l.values.push(batch.values[i]);
                    l.dones.push(batch.dones[i]);
                }
            }
            l
        })
        .collect()
}

fn advantage_score(batch: &RolloutBatch, gamma: f64, lambda: f64, f: fn(f64) -> f64) -> Result<Vec<f64>> {
    (0..batch.n_envs())
        .map(|e| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for lane in lanes_of_env(batch, e) {
                let adv = gae_lane(&lane.rewards, &lane.values, &lane.dones, lane.bootstrap, gamma, lambda);
                sum += adv.iter().map(|&x| f(x)).sum::<f64>();
                count += adv.len();
            }
            if count == 0 {
                return Err(Error::UndefinedScore("empty trajectory"));
            }
            Ok(sum / count as f64)
        })
        .collect()
}

/// Positive value loss per environment of the batch: the mean over valid
/// steps of the clipped GAE advantage.
pub fn score_pvl(batch: &RolloutBatch, gamma: f64, lambda: f64) -> Result<Vec<f64>> {
    advantage_score(batch, gamma, lambda, |x| x.max(0.0))
}

/// As [`score_pvl`] with the absolute value in place of clipping.
pub fn score_l1(batch: &RolloutBatch, gamma: f64, lambda: f64) -> Result<Vec<f64>> {
    advantage_score(batch, gamma, lambda, f64::abs)
}

/// Mean gap between the best return seen on a level and the value estimates.
pub fn score_maxmc(values: &[f64], max_return: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().map(|v| max_return - v).sum::<f64>() / values.len() as f64
}

/// Value estimates of the valid steps of one environment.
pub fn env_values(batch: &RolloutBatch, env: usize) -> Vec<f64> {
    lanes_of_env(batch, env).into_iter().flat_map(|l| l.values).collect()
}
