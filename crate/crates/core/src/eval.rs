//! Robustness evaluation: CVaR of success over sampled solvable levels,
//! pairwise domination heatmaps and the binned score-vs-success analysis.

use std::io::Write;

use rand::seq::SliceRandom;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::env::Environment;
use crate::rng::{fork, SimRng};
use crate::rollout::{run_episodes, Policy};
use crate::{Error, Result};

/// Success rate per level over `episodes` fresh episodes each.
pub fn evaluate_levels<E: Environment, P: Policy>(
    env: &E,
    policy: &P,
    levels: &[E::Level],
    episodes: usize,
    chunk_envs: usize,
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    if episodes == 0 {
        return Err(Error::Argument("need at least one episode per level".into()));
    }
    let stats = run_episodes(env, policy, levels, episodes, chunk_envs, rng)?;
    Ok(stats.iter().map(|s| s.success_rate().unwrap_or(0.0)).collect())
}

/// Size of the worst-α subset of `n` levels, `⌈α·n/100⌉`.
pub fn worst_count(n: usize, alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha <= 100.0) {
        return Err(Error::Argument(format!("alpha must lie in (0, 100], got {alpha}")));
    }
    // the tolerance keeps e.g. 10% of 500 from rounding up to 51
    Ok(((alpha * n as f64 / 100.0) - 1e-9).ceil().max(0.0) as usize)
}

/// Level indices sorted by ascending rate; equal rates in random order.
pub fn ascending_order(rates: &[f64], rng: &mut SimRng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..rates.len()).collect();
    order.shuffle(rng);
    order.sort_by(|&a, &b| rates[a].total_cmp(&rates[b]));
    order
}

/// CVaR of a fixed rate table: the mean of the `⌈α·n/100⌉` lowest rates.
pub fn cvar_of_table(rates: &[f64], alpha: f64) -> Result<f64> {
    let k = worst_count(rates.len(), alpha)?;
    if k == 0 {
        return Err(Error::Argument("empty rate table".into()));
    }
    let mut sorted = rates.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[..k].iter().sum::<f64>() / k as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelRecord {
    pub level_id: usize,
    pub rate: f64,
    /// Rate from the fresh re-evaluation, for levels in a worst subset.
    pub reeval_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub seed: u64,
    pub records: Vec<LevelRecord>,
    /// `(α, CVaR)` pairs in the requested order.
    pub cvar_by_alpha: Vec<(f64, f64)>,
    pub mean_success: f64,
}

impl EvalReport {
    pub fn rates(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rate).collect()
    }

    pub fn write_records(&self, mut out: impl Write) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Appends `alpha,value,seed` rows; the caller writes the header.
    pub fn write_cvar_rows(&self, mut out: impl Write) -> Result<()> {
        for (a, v) in &self.cvar_by_alpha {
            writeln!(out, "{a},{v},{}", self.seed)?;
        }
        Ok(())
    }
}

/// Evaluates `levels`, then for each α re-evaluates the worst `⌈α·N/100⌉`
/// levels with fresh episodes and reports the mean re-evaluated rate. The
/// subsets are nested, so one re-evaluation of the largest serves every α.
#[allow(clippy::too_many_arguments)]
pub fn cvar_on_levels<E: Environment, P: Policy>(
    env: &E,
    policy: &P,
    levels: &[E::Level],
    alphas: &[f64],
    episodes: usize,
    chunk_envs: usize,
    seed: u64,
    rng: &mut SimRng,
) -> Result<EvalReport> {
    let n = levels.len();
    if n == 0 {
        return Err(Error::Argument("no levels to evaluate".into()));
    }
    let counts: Vec<usize> = alphas.iter().map(|&a| worst_count(n, a)).collect::<Result<_>>()?;
    let rates = evaluate_levels(env, policy, levels, episodes, chunk_envs, &mut fork(rng))?;
    let order = ascending_order(&rates, rng);
    let worst = counts.iter().copied().max().unwrap_or(0);
    let subset: Vec<E::Level> = order[..worst].iter().map(|&i| levels[i].clone()).collect();
    let again = evaluate_levels(env, policy, &subset, episodes, chunk_envs, &mut fork(rng))?;

    let mut records: Vec<LevelRecord> =
        rates.iter().enumerate().map(|(level_id, &rate)| LevelRecord { level_id, rate, reeval_rate: None }).collect();
    for (&i, &r) in order.iter().zip(&again) {
        records[i].reeval_rate = Some(r);
    }
    let cvar_by_alpha =
        alphas.iter().zip(&counts).map(|(&a, &k)| (a, again[..k].iter().sum::<f64>() / k as f64)).collect();
    Ok(EvalReport { seed, records, cvar_by_alpha, mean_success: rates.iter().sum::<f64>() / n as f64 })
}

/// The full protocol: `n` fresh solvable levels, then [`cvar_on_levels`].
#[allow(clippy::too_many_arguments)]
pub fn cvar_success<E: Environment, P: Policy>(
    env: &E,
    policy: &P,
    n: usize,
    alphas: &[f64],
    episodes: usize,
    chunk_envs: usize,
    seed: u64,
    rng: &mut SimRng,
) -> Result<EvalReport> {
    for &a in alphas {
        worst_count(n, a)?;
    }
    let levels: Vec<E::Level> = (0..n).map(|_| env.sample_solvable_level(rng)).collect::<Result<_>>()?;
    cvar_on_levels(env, policy, &levels, alphas, episodes, chunk_envs, seed, rng)
}

/// Bin of a rate in `[0, 1]`: `[i/b, (i+1)/b)`, the last bin closed.
pub fn rate_bin(rate: f64, bins: usize) -> usize {
    // rates are ratios of small integers; the nudge keeps k/b in bin k
    ((rate * bins as f64 + 1e-9).floor().max(0.0) as usize).min(bins - 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HeatmapGrid {
    pub bins: usize,
    /// `counts[x][y]`: levels with A's rate in bin x and B's in bin y.
    pub counts: Vec<Vec<u64>>,
}

impl HeatmapGrid {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn domination_heatmap(rates_a: &[f64], rates_b: &[f64], bins: usize) -> Result<HeatmapGrid> {
    if rates_a.len() != rates_b.len() {
        return Err(Error::Arity { what: "heatmap rates", expected: rates_a.len(), got: rates_b.len() });
    }
    if bins == 0 {
        return Err(Error::Argument("heatmap needs at least one bin".into()));
    }
    let mut counts = vec![vec![0u64; bins]; bins];
    for (&a, &b) in rates_a.iter().zip(rates_b) {
        counts[rate_bin(a, bins)][rate_bin(b, bins)] += 1;
    }
    Ok(HeatmapGrid { bins, counts })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationReport {
    /// Mean score of the samples in each success-rate bin.
    pub bin_means: Vec<Option<f64>>,
    pub bin_counts: Vec<usize>,
    pub r: f64,
    pub p_value: f64,
    pub n: usize,
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Arity { what: "correlation samples", expected: x.len(), got: y.len() });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("a variable has zero variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p-value of `r` under the null of no correlation.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let dof = (n - 2) as f64;
    let t = r * (dof / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, dof).expect("positive degrees of freedom");
    2.0 * dist.sf(t.abs())
}

pub fn binned_correlation(scores: &[f64], success_rates: &[f64], bins: usize) -> Result<CorrelationReport> {
    if scores.len() != success_rates.len() {
        return Err(Error::Arity { what: "correlation samples", expected: scores.len(), got: success_rates.len() });
    }
    let n = scores.len();
    if n < 3 {
        return Err(Error::Argument(format!("correlation needs at least 3 samples, got {n}")));
    }
    if bins == 0 {
        return Err(Error::Argument("need at least one bin".into()));
    }
    let r = pearson(scores, success_rates)?;
    let mut sums = vec![0.0; bins];
    let mut bin_counts = vec![0usize; bins];
    for (&s, &p) in scores.iter().zip(success_rates) {
        let b = rate_bin(p, bins);
        sums[b] += s;
        bin_counts[b] += 1;
    }
    let bin_means = sums.iter().zip(&bin_counts).map(|(&s, &c)| (c > 0).then(|| s / c as f64)).collect();
    Ok(CorrelationReport { bin_means, bin_counts, r, p_value: correlation_p_value(r, n), n })
}
