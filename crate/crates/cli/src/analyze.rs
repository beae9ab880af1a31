//! Score-function diagnostics: roll a checkpoint on random levels, score each
//! level with every score function and correlate the scores with success.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Result;
use serde::Serialize;
use sfl_core::curricula::{env_values, learnability, score_l1, score_maxmc, score_pvl, ScoreFunction};
use sfl_core::env::Environment;
use sfl_core::eval::{binned_correlation, CorrelationReport};
use sfl_core::rng::{fork, stream, SimRng};
use sfl_core::rollout::{collect_rollout, Policy};

use crate::config::RunConfig;
use crate::evaluate::load_policy;
use crate::with_env;

pub const SCORE_NAMES: [&str; 4] = ["pvl", "maxmc", "l1", "learnability"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelScores {
    pub success: f64,
    /// In the order of [`SCORE_NAMES`].
    pub scores: [f64; 4],
}

#[derive(Clone, Debug, Serialize)]
pub struct ScoreAnalysis {
    pub levels_rolled: usize,
    /// Levels with at least one completed episode, the only ones scored.
    pub levels_scored: usize,
    pub correlations: Vec<(String, Option<CorrelationReport>)>,
}

/// Rolls `policy` for `steps` steps on each level and scores every level
/// that completed an episode.
#[allow(clippy::too_many_arguments)]
pub fn score_all<E: Environment, P: Policy>(
    env: &E,
    policy: &P,
    levels: &[E::Level],
    steps: usize,
    gamma: f64,
    lambda: f64,
    chunk_envs: usize,
    rng: &mut SimRng,
) -> Result<Vec<LevelScores>> {
    let mut out = Vec::new();
    for chunk in levels.chunks(chunk_envs.max(1)) {
        let r = collect_rollout(env, policy, chunk, steps, gamma, true, &mut fork(rng))?;
        let pvl = score_pvl(&r.batch, gamma, lambda)?;
        let l1 = score_l1(&r.batch, gamma, lambda)?;
        for (i, stats) in r.stats.iter().enumerate() {
            let Some(success) = stats.success_rate() else { continue };
            let values = env_values(&r.batch, i);
            let maxmc = score_maxmc(&values, stats.max_return.unwrap_or(0.0));
            let learn = learnability(stats, ScoreFunction::Learnability)?;
            out.push(LevelScores { success, scores: [pvl[i], maxmc, l1[i], learn] });
        }
    }
    Ok(out)
}

pub fn correlate(scored: &[LevelScores]) -> Vec<(String, Option<CorrelationReport>)> {
    let success: Vec<f64> = scored.iter().map(|s| s.success).collect();
    SCORE_NAMES
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let xs: Vec<f64> = scored.iter().map(|s| s.scores[k]).collect();
            // undefined correlations (e.g. a constant score) are reported as null
            (name.to_string(), binned_correlation(&xs, &success, 10).ok())
        })
        .collect()
}

/// Writes `scores.csv` and `correlation.json` into `out`.
pub fn analyze_scores(
    cfg: &RunConfig,
    checkpoint: &Path,
    n_levels: usize,
    steps: usize,
    seed: u64,
    out: &Path,
) -> Result<ScoreAnalysis> {
    let scored = with_env!(cfg, env => {
        let params = load_policy(&env, checkpoint)?;
        let policy = sfl_core::rollout::NetPolicy::new(&params, env.action_space())?;
        let mut rng = stream(seed, &[10]);
        let levels = (0..n_levels).map(|_| env.sample_level(&mut rng)).collect::<sfl_core::Result<Vec<_>>>()?;
        score_all(&env, &policy, &levels, steps, cfg.ppo.gamma, cfg.ppo.gae_lambda, cfg.eval.chunk_envs, &mut rng)?
    });
    fs::create_dir_all(out)?;
    let mut csv = BufWriter::new(File::create(out.join("scores.csv"))?);
    writeln!(csv, "success,{}", SCORE_NAMES.join(","))?;
    for s in &scored {
        let cols: Vec<String> = s.scores.iter().map(f64::to_string).collect();
        writeln!(csv, "{},{}", s.success, cols.join(","))?;
    }
    csv.flush()?;
    let analysis =
        ScoreAnalysis { levels_rolled: n_levels, levels_scored: scored.len(), correlations: correlate(&scored) };
    fs::write(out.join("correlation.json"), serde_json::to_string_pretty(&analysis)?)?;
    Ok(analysis)
}
