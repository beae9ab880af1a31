use super::RolloutBatch;

/// Backward GAE recursion for one lane.
///
/// `next_values[t]` is `V(o_{t+1})`; it is ignored where `dones[t]` is set.
/// Returns the advantages; value targets are `advantage + value`.
pub fn gae_lane(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let next_v = if t + 1 < n { values[t + 1] } else { bootstrap };
        let cont = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_v * cont - values[t];
        running = delta + gamma * lambda * cont * running;
        adv[t] = running;
    }
    adv
}

/// TD errors `δ_t = r_t + γ V(o_{t+1}) (1 - done_t) - V(o_t)`.
pub fn td_errors(rewards: &[f64], values: &[f64], dones: &[bool], bootstrap: f64, gamma: f64) -> Vec<f64> {
    let n = rewards.len();
    (0..n)
        .map(|t| {
            let next_v = if t + 1 < n { values[t + 1] } else { bootstrap };
            let cont = if dones[t] { 0.0 } else { 1.0 };
            rewards[t] + gamma * next_v * cont - values[t]
        })
        .collect()
}

/// Advantages and value targets for every entry of the batch, in the batch's
/// time-major order.
pub fn compute_gae(batch: &RolloutBatch, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = batch.len();
    let mut adv = vec![0.0; n];
    let mut targets = vec![0.0; n];
    let mut r = vec![0.0; batch.n_steps];
    let mut v = vec![0.0; batch.n_steps];
    let mut d = vec![false; batch.n_steps];
    for lane in 0..batch.n_lanes {
        for t in 0..batch.n_steps {
            let i = batch.idx(t, lane);
            r[t] = batch.rewards[i];
            v[t] = batch.values[i];
            d[t] = batch.dones[i];
        }
        let a = gae_lane(&r, &v, &d, batch.bootstrap_values[lane], gamma, lambda);
        for t in 0..batch.n_steps {
            let i = batch.idx(t, lane);
            adv[i] = a[t];
            targets[i] = a[t] + v[t];
        }
    }
    (adv, targets)
}
