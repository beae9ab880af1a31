use crate::{Error, Result};

/// Trajectory data for `n_lanes` parallel agent streams over `n_steps` steps.
///
/// Per-step arrays are time-major: entry `t * n_lanes + lane`. Lanes are
/// ordered environment-major (`env * agents_per_env + agent`) so the agents of
/// one environment are adjacent. A lane whose agent has finished while its
/// teammates are still running carries masked steps (`mask = false`,
/// `done = true`, zero reward and value) until the episode resets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutBatch {
    pub n_steps: usize,
    pub n_lanes: usize,
    pub agents_per_env: usize,
    pub obs_dim: usize,
    /// Floats per action (1 for discrete indices).
    pub act_width: usize,
    pub obs: Vec<f64>,
    /// Unclipped sampled actions, the ones `log_probs` refer to.
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    /// The lane's episode ended on this step; the next step starts afresh.
    pub dones: Vec<bool>,
    /// The agent acted on this step; masked steps carry no learning signal.
    pub masks: Vec<bool>,
    /// Agent reached its goal on this step.
    pub successes: Vec<bool>,
    /// `V(o_T)` for the observation following the last step of each lane.
    pub bootstrap_values: Vec<f64>,
}

impl RolloutBatch {
    pub fn new(n_steps: usize, n_lanes: usize, agents_per_env: usize, obs_dim: usize, act_width: usize) -> Self {
        let n = n_steps * n_lanes;
        Self {
            n_steps,
            n_lanes,
            agents_per_env,
            obs_dim,
            act_width,
            obs: vec![0.0; n * obs_dim],
            actions: vec![0.0; n * act_width],
            log_probs: vec![0.0; n],
            values: vec![0.0; n],
            rewards: vec![0.0; n],
            dones: vec![false; n],
            masks: vec![true; n],
            successes: vec![false; n],
            bootstrap_values: vec![0.0; n_lanes],
        }
    }

    pub fn len(&self) -> usize {
        self.n_steps * self.n_lanes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, t: usize, lane: usize) -> usize {
        t * self.n_lanes + lane
    }

    pub fn n_envs(&self) -> usize {
        self.n_lanes / self.agents_per_env.max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        let checks = [
            ("observations", self.obs.len(), n * self.obs_dim),
            ("actions", self.actions.len(), n * self.act_width),
            ("log_probs", self.log_probs.len(), n),
            ("values", self.values.len(), n),
            ("rewards", self.rewards.len(), n),
            ("dones", self.dones.len(), n),
            ("masks", self.masks.len(), n),
            ("successes", self.successes.len(), n),
            ("bootstrap values", self.bootstrap_values.len(), self.n_lanes),
        ];
        for (what, got, expected) in checks {
            if got != expected {
                return Err(Error::Arity { what, expected, got });
            }
        }
        if self.agents_per_env == 0 || !self.n_lanes.is_multiple_of(self.agents_per_env) {
            return Err(Error::Argument("lanes must be a multiple of agents per environment".into()));
        }
        Ok(())
    }

    /// Values of one lane in time order.
    pub fn lane_values(&self, lane: usize) -> Vec<f64> {
        (0..self.n_steps).map(|t| self.values[self.idx(t, lane)]).collect()
    }
}
