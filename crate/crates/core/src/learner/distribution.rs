//! Action distributions for the two policy heads.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::SimRng;

const HALF_LOG_2PI: f64 = 0.918_938_533_204_672_8;

/// Log-softmax of `logits` into `out`.
pub fn log_softmax(logits: &[f64], out: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    for (o, &z) in out.iter_mut().zip(logits) {
        *o = z - lse;
    }
}

/// Draws an index by inverse CDF and returns it with its log-probability.
pub fn sample_categorical(logits: &[f64], rng: &mut SimRng) -> (usize, f64) {
    let mut logp = vec![0.0; logits.len()];
    log_softmax(logits, &mut logp);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &lp) in logp.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            return (i, lp);
        }
    }
    // rounding left `u` above the accumulated mass: take the last non-zero one
    let i = logp.iter().rposition(|lp| lp.exp() > 0.0).unwrap_or(0);
    (i, logp[i])
}

pub fn categorical_entropy(logits: &[f64]) -> f64 {
    let mut logp = vec![0.0; logits.len()];
    log_softmax(logits, &mut logp);
    -logp.iter().map(|&lp| if lp.exp() > 0.0 { lp.exp() * lp } else { 0.0 }).sum::<f64>()
}

/// Log-density of `x` under a diagonal Gaussian.
pub fn gaussian_log_prob(x: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((&x, &m), &ls)| {
            let z = (x - m) / ls.exp();
            -0.5 * z * z - ls - HALF_LOG_2PI
        })
        .sum()
}

pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|&ls| ls + 0.5 * (2.0 * PI * std::f64::consts::E).ln()).sum()
}

/// Samples a diagonal Gaussian. `raw` receives the unclipped draw (its
/// log-density is returned) and `clipped` the draw clamped to the bounds.
pub fn sample_gaussian(
    mean: &[f64],
    log_std: &[f64],
    low: &[f64],
    high: &[f64],
    rng: &mut SimRng,
    raw: &mut [f64],
    clipped: &mut [f64],
) -> f64 {
    for d in 0..mean.len() {
        let eps: f64 = rng.sample(StandardNormal);
        raw[d] = mean[d] + log_std[d].exp() * eps;
        clipped[d] = raw[d].clamp(low[d], high[d]);
    }
    gaussian_log_prob(raw, mean, log_std)
}
