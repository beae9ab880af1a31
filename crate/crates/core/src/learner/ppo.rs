use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::distribution::{gaussian_log_prob, log_softmax};
use super::network::{HeadKind, PolicyParams};
use super::{compute_gae, RolloutBatch};
use crate::rng::SimRng;
use crate::{Error, Result};

const ADV_EPS: f64 = 1e-8;
const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub n_steps: usize,
    pub epochs: usize,
    pub minibatches: usize,
    pub clip: f64,
    pub lr: f64,
    pub anneal_lr: bool,
    pub adam_eps: f64,
    pub max_grad_norm: f64,
    pub value_clip: bool,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub hidden: usize,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            n_steps: 512,
            epochs: 4,
            minibatches: 4,
            clip: 0.04,
            lr: 2.4e-4,
            anneal_lr: true,
            adam_eps: 1e-5,
            max_grad_norm: 0.5,
            value_clip: true,
            entropy_coef: 0.0,
            value_coef: 0.5,
            hidden: 512,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v <= 1.0 {
                Ok(())
            } else {
                Err(Error::Argument(format!("{name} must lie in (0, 1], got {v}")))
            }
        };
        unit("gamma", self.gamma)?;
        unit("gae_lambda", self.gae_lambda)?;
        for (name, v) in [
            ("n_steps", self.n_steps),
            ("epochs", self.epochs),
            ("minibatches", self.minibatches),
            ("hidden", self.hidden),
        ] {
            if v == 0 {
                return Err(Error::Argument(format!("{name} must be positive")));
            }
        }
        for (name, v) in [("clip", self.clip), ("adam_eps", self.adam_eps), ("max_grad_norm", self.max_grad_norm)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("lr", self.lr), ("entropy_coef", self.entropy_coef), ("value_coef", self.value_coef)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// Learning rate for update `update` of `total`, linearly annealed to zero
    /// when enabled.
    pub fn lr_at(&self, update: u64, total: u64) -> f64 {
        if self.anneal_lr && total > 0 {
            self.lr * (1.0 - update as f64 / total as f64).max(0.0)
        } else {
            self.lr
        }
    }
}

/// Flattened training samples for one loss evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Minibatch {
    pub rows: usize,
    pub obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub old_log_probs: Vec<f64>,
    pub old_values: Vec<f64>,
    /// Already normalised.
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl Minibatch {
    /// Gathers the given batch entries, normalising their advantages.
    pub fn gather(batch: &RolloutBatch, idx: &[usize], adv: &[f64], targets: &[f64]) -> Self {
        let (od, aw) = (batch.obs_dim, batch.act_width);
        let mut mb = Minibatch {
            rows: idx.len(),
            obs: Vec::with_capacity(idx.len() * od),
            actions: Vec::with_capacity(idx.len() * aw),
            old_log_probs: Vec::with_capacity(idx.len()),
            old_values: Vec::with_capacity(idx.len()),
            advantages: Vec::with_capacity(idx.len()),
            returns: Vec::with_capacity(idx.len()),
        };
        for &i in idx {
            mb.obs.extend_from_slice(&batch.obs[i * od..(i + 1) * od]);
            mb.actions.extend_from_slice(&batch.actions[i * aw..(i + 1) * aw]);
            mb.old_log_probs.push(batch.log_probs[i]);
            mb.old_values.push(batch.values[i]);
            mb.advantages.push(adv[i]);
            mb.returns.push(targets[i]);
        }
        normalize(&mut mb.advantages);
        mb
    }

    /// Every unmasked entry of the batch as one minibatch.
    pub fn from_batch(batch: &RolloutBatch, cfg: &PpoConfig) -> Self {
        let (adv, targets) = compute_gae(batch, cfg.gamma, cfg.gae_lambda);
        let idx: Vec<usize> = (0..batch.len()).filter(|&i| batch.masks[i]).collect();
        Self::gather(batch, &idx, &adv, &targets)
    }
}

fn normalize(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    for v in x {
        *v = (*v - mean) / (std + ADV_EPS);
    }
}

/// Loss terms averaged over a minibatch.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// PPO loss on a minibatch and, when `want_grad`, its gradient with respect
/// to the flat parameters.
pub fn loss_and_grad(
    params: &PolicyParams,
    mb: &Minibatch,
    cfg: &PpoConfig,
    want_grad: bool,
) -> Result<(LossParts, Option<Vec<f64>>)> {
    let (fwd, cache) = params.forward_cached(&mb.obs, mb.rows)?;
    let m = mb.rows as f64;
    let a_n = params.shape.head.outputs();
    let eps = cfg.clip;

    let mut parts = LossParts::default();
    let mut d_head = Array2::<f64>::zeros((mb.rows, a_n));
    let mut d_values = Array1::<f64>::zeros(mb.rows);
    let mut d_log_std = vec![0.0; params.shape.log_std_len()];
    let log_std = params.log_std().to_vec();
    let mut lsm = vec![0.0; a_n];

    for i in 0..mb.rows {
        let head = fwd.head.row(i);
        let head = head.as_slice().expect("contiguous");
        let (logp, entropy) = match params.shape.head {
            HeadKind::Discrete(_) => {
                log_softmax(head, &mut lsm);
                let a = mb.actions[i] as usize;
                let h = -lsm.iter().map(|&l| l.exp() * l).sum::<f64>();
                (lsm[a], h)
            }
            HeadKind::Continuous(n) => {
                let x = &mb.actions[i * n..(i + 1) * n];
                let h =
                    log_std.iter().map(|&s| s + 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln()).sum();
                (gaussian_log_prob(x, head, &log_std), h)
            }
        };

        let adv = mb.advantages[i];
        let log_ratio = logp - mb.old_log_probs[i];
        let ratio = log_ratio.exp();
        let surr1 = ratio * adv;
        let surr2 = ratio.clamp(1.0 - eps, 1.0 + eps) * adv;
        parts.policy -= surr1.min(surr2) / m;
        parts.entropy += entropy / m;
        // (r - 1) - log r: unbiased and never negative
        parts.approx_kl += ((ratio - 1.0) - log_ratio) / m;
        if (ratio - 1.0).abs() > eps {
            parts.clip_fraction += 1.0 / m;
        }
        let d_logp = if surr1 <= surr2 { -adv * ratio / m } else { 0.0 };

        let v = fwd.values[i];
        let ret = mb.returns[i];
        let d_v = if cfg.value_clip {
            let v_old = mb.old_values[i];
            let vc = v_old + (v - v_old).clamp(-eps, eps);
            let (l1, l2) = ((v - ret).powi(2), (vc - ret).powi(2));
            parts.value += 0.5 * l1.max(l2) / m;
            if l1 >= l2 {
                (v - ret) / m
            } else if (v - v_old).abs() < eps {
                (vc - ret) / m
            } else {
                0.0
            }
        } else {
            parts.value += 0.5 * (v - ret).powi(2) / m;
            (v - ret) / m
        };

        if !want_grad {
            continue;
        }
        d_values[i] = cfg.value_coef * d_v;
        match params.shape.head {
            HeadKind::Discrete(_) => {
                let a = mb.actions[i] as usize;
                for j in 0..a_n {
                    let p = lsm[j].exp();
                    let onehot = if j == a { 1.0 } else { 0.0 };
                    let d_ent = -p * (lsm[j] + entropy);
                    d_head[[i, j]] = d_logp * (onehot - p) - cfg.entropy_coef * d_ent / m;
                }
            }
            HeadKind::Continuous(n) => {
                let x = &mb.actions[i * n..(i + 1) * n];
                for d in 0..n {
                    let var = (2.0 * log_std[d]).exp();
                    let diff = x[d] - head[d];
                    d_head[[i, d]] = d_logp * diff / var;
                    d_log_std[d] += d_logp * (diff * diff / var - 1.0) - cfg.entropy_coef / m;
                }
            }
        }
    }
    parts.total = parts.policy + cfg.value_coef * parts.value - cfg.entropy_coef * parts.entropy;

    let grad = want_grad.then(|| params.backward(&cache, &d_head, &d_values, &d_log_std));
    Ok((parts, grad))
}

/// Statistics of one PPO update, averaged over its minibatch steps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    /// Global gradient norm before clipping.
    pub grad_norm: f64,
    pub lr: f64,
    pub samples: usize,
}

fn finite(stat: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::Numerical { stat: stat.into(), value })
    }
}

/// Scales `grad` to at most `max_norm` and returns its original norm.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

pub fn adam_step(params: &mut PolicyParams, grad: &[f64], lr: f64, eps: f64) {
    let st = &mut params.adam;
    st.step += 1;
    let bc1 = 1.0 - BETA1.powi(st.step as i32);
    let bc2 = 1.0 - BETA2.powi(st.step as i32);
    for (((w, g), m), v) in params.theta.iter_mut().zip(grad).zip(&mut st.m).zip(&mut st.v) {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        *w -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
    }
    params.clamp_log_std();
}

/// Runs the configured epochs of clipped-surrogate PPO on `batch` and returns
/// the updated parameters. The input parameters are never modified, so a
/// numerical failure leaves the caller with the last good state.
pub fn ppo_update(
    params: &PolicyParams,
    batch: &RolloutBatch,
    cfg: &PpoConfig,
    lr: f64,
    rng: &mut SimRng,
) -> Result<(PolicyParams, PpoStats)> {
    batch.validate()?;
    let (adv, targets) = compute_gae(batch, cfg.gamma, cfg.gae_lambda);
    let mut idx: Vec<usize> = (0..batch.len()).filter(|&i| batch.masks[i]).collect();
    if idx.len() < cfg.minibatches {
        return Err(Error::Argument(format!(
            "{} valid samples cannot fill {} minibatches",
            idx.len(),
            cfg.minibatches
        )));
    }
    let mut out = params.clone();
    let mut stats = PpoStats { lr, samples: idx.len(), ..PpoStats::default() };
    let mut steps = 0.0;
    for _ in 0..cfg.epochs {
        idx.shuffle(rng);
        let base = idx.len() / cfg.minibatches;
        let extra = idx.len() % cfg.minibatches;
        let mut start = 0;
        for k in 0..cfg.minibatches {
            let len = base + usize::from(k < extra);
            let mb = Minibatch::gather(batch, &idx[start..start + len], &adv, &targets);
            start += len;

            let (parts, grad) = loss_and_grad(&out, &mb, cfg, true)?;
            let mut grad = grad.expect("gradient requested");
            finite("policy_loss", parts.policy)?;
            finite("value_loss", parts.value)?;
            let norm = clip_grad_norm(&mut grad, cfg.max_grad_norm);
            finite("grad_norm", norm)?;
            adam_step(&mut out, &grad, lr, cfg.adam_eps);

            stats.policy_loss += parts.policy;
            stats.value_loss += parts.value;
            stats.entropy += parts.entropy;
            stats.approx_kl += parts.approx_kl;
            stats.clip_fraction += parts.clip_fraction;
            stats.grad_norm += norm;
            steps += 1.0;
        }
    }
    if !out.is_finite() {
        return Err(Error::Numerical { stat: "parameters".into(), value: f64::NAN });
    }
    for s in [
        &mut stats.policy_loss,
        &mut stats.value_loss,
        &mut stats.entropy,
        &mut stats.approx_kl,
        &mut stats.clip_fraction,
        &mut stats.grad_norm,
    ] {
        *s /= steps;
    }
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::network::NetShape;
    use crate::learner::testutil::toy_batch;
    use crate::rng::stream;
    use rand::Rng;

    fn shape() -> NetShape {
        NetShape { obs_dim: 8, hidden: 16, head: HeadKind::Discrete(4) }
    }

    #[test]
    fn zero_lr_keeps_weights() {
        let p = PolicyParams::init(shape(), &mut stream(0, &[]));
        let b = toy_batch(shape(), &p, 16, 4, 1);
        let (q, stats) = ppo_update(&p, &b, &PpoConfig::default(), 0.0, &mut stream(2, &[])).unwrap();
        assert_eq!(q.theta, p.theta);
        assert!(stats.grad_norm > 0.0);
    }

    #[test]
    fn small_step_does_not_increase_loss() {
        let cfg = PpoConfig { epochs: 1, minibatches: 1, ..PpoConfig::default() };
        for seed in 0..5 {
            let p = PolicyParams::init(shape(), &mut stream(seed, &[]));
            let b = toy_batch(shape(), &p, 16, 4, seed + 100);
            let mb = Minibatch::from_batch(&b, &cfg);
            let before = loss_and_grad(&p, &mb, &cfg, false).unwrap().0.total;
            let (q, _) = ppo_update(&p, &b, &cfg, 1e-4, &mut stream(seed, &[1])).unwrap();
            let after = loss_and_grad(&q, &mb, &cfg, false).unwrap().0.total;
            assert!(after <= before, "{after} > {before}");
        }
    }

    #[test]
    fn update_is_deterministic() {
        let p = PolicyParams::init(shape(), &mut stream(0, &[]));
        let b = toy_batch(shape(), &p, 16, 4, 1);
        let cfg = PpoConfig::default();
        let a = ppo_update(&p, &b, &cfg, 1e-3, &mut stream(5, &[])).unwrap();
        let c = ppo_update(&p, &b, &cfg, 1e-3, &mut stream(5, &[])).unwrap();
        assert_eq!(a.0, c.0);
    }

    #[test]
    fn nan_reward_is_reported() {
        let p = PolicyParams::init(shape(), &mut stream(0, &[]));
        let mut b = toy_batch(shape(), &p, 16, 4, 1);
        b.rewards[3] = f64::NAN;
        match ppo_update(&p, &b, &PpoConfig::default(), 1e-3, &mut stream(5, &[])) {
            Err(Error::Numerical { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn clipped_norm_bound() {
        let mut rng = stream(4, &[]);
        for _ in 0..100 {
            let mut g: Vec<f64> = (0..50).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect();
            clip_grad_norm(&mut g, 0.5);
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(n <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn annealed_lr() {
        let cfg = PpoConfig::default();
        assert_eq!(cfg.lr_at(0, 100), 2.4e-4);
        assert!((cfg.lr_at(50, 100) - 1.2e-4).abs() < 1e-18);
        assert_eq!(cfg.lr_at(100, 100), 0.0);
    }
}
