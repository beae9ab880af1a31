//! Batched rollouts of a policy over a set of levels.
//!
//! Every lane (one agent in one environment) owns its own random stream,
//! forked from the caller's stream before any work starts, so results do not
//! depend on how environment steps are scheduled across threads.

use rayon::prelude::*;

use crate::env::{ActionSpace, Environment};
use crate::learner::distribution::{log_softmax, sample_categorical, sample_gaussian};
use crate::learner::{HeadKind, PolicyParams, RolloutBatch};
use crate::rng::{fork_many, stream, SimRng};
use crate::{Error, Result};
use rand::Rng;

/// Policy outputs for a batch of observations.
#[derive(Clone, Debug, Default)]
pub struct ActBatch {
    /// Sampled actions as the policy sees them (unclipped).
    pub raw: Vec<f64>,
    /// Actions passed to the environment.
    pub env_actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
}

impl ActBatch {
    fn resize(&mut self, rows: usize, width: usize) {
        self.raw.resize(rows * width, 0.0);
        self.env_actions.resize(rows * width, 0.0);
        self.log_probs.resize(rows, 0.0);
        self.values.resize(rows, 0.0);
    }
}

pub trait Policy: Sync {
    /// Samples one action per observation row, row `i` drawing from `rngs[i]`.
    fn act(&self, obs: &[f64], rows: usize, rngs: &mut [SimRng], out: &mut ActBatch) -> Result<()>;
    fn values(&self, obs: &[f64], rows: usize) -> Result<Vec<f64>>;
}

/// The stochastic policy of a network for a given action space.
pub struct NetPolicy<'a> {
    pub params: &'a PolicyParams,
    pub space: ActionSpace,
}

impl<'a> NetPolicy<'a> {
    pub fn new(params: &'a PolicyParams, space: ActionSpace) -> Result<Self> {
        let ok = match (&space, params.shape.head) {
            (ActionSpace::Discrete(n), HeadKind::Discrete(m)) => *n == m,
            (ActionSpace::Continuous { low, .. }, HeadKind::Continuous(m)) => low.len() == m,
            _ => false,
        };
        if !ok {
            return Err(Error::Compatibility(format!(
                "network head {:?} does not match action space {space:?}",
                params.shape.head
            )));
        }
        Ok(Self { params, space })
    }
}

impl Policy for NetPolicy<'_> {
    fn act(&self, obs: &[f64], rows: usize, rngs: &mut [SimRng], out: &mut ActBatch) -> Result<()> {
        let fwd = self.params.forward(obs, rows)?;
        let width = self.space.width();
        out.resize(rows, width);
        for (i, rng) in rngs.iter_mut().enumerate().take(rows) {
            let head = fwd.head.row(i);
            let head = head.as_slice().expect("contiguous");
            match &self.space {
                ActionSpace::Discrete(_) => {
                    let (a, lp) = sample_categorical(head, rng);
                    out.raw[i] = a as f64;
                    out.env_actions[i] = a as f64;
                    out.log_probs[i] = lp;
                }
                ActionSpace::Continuous { low, high } => {
                    let (raw, env) =
                        (&mut out.raw[i * width..(i + 1) * width], &mut out.env_actions[i * width..(i + 1) * width]);
                    out.log_probs[i] = sample_gaussian(head, self.params.log_std(), low, high, rng, raw, env);
                }
            }
            out.values[i] = fwd.values[i];
        }
        Ok(())
    }

    fn values(&self, obs: &[f64], rows: usize) -> Result<Vec<f64>> {
        Ok(self.params.forward(obs, rows)?.values.to_vec())
    }
}

/// Probabilities of a discrete network policy, row-major.
pub fn action_probabilities(params: &PolicyParams, obs: &[f64], rows: usize) -> Result<Vec<f64>> {
    let fwd = params.forward(obs, rows)?;
    let n = params.shape.head.outputs();
    let mut out = vec![0.0; rows * n];
    for i in 0..rows {
        log_softmax(fwd.head.row(i).as_slice().expect("contiguous"), &mut out[i * n..(i + 1) * n]);
    }
    out.iter_mut().for_each(|l| *l = l.exp());
    Ok(out)
}

/// Episode outcomes observed on one level.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LevelOutcomeStats {
    pub episodes: usize,
    /// Episodes in which every agent reached its goal.
    pub successes: usize,
    pub agent_successes: Vec<usize>,
    /// Highest discounted episode return seen (mean over agents).
    pub max_return: Option<f64>,
    pub return_sum: f64,
}

impl LevelOutcomeStats {
    pub fn new(agents: usize) -> Self {
        Self { agent_successes: vec![0; agents], ..Self::default() }
    }

    pub fn success_rate(&self) -> Option<f64> {
        (self.episodes > 0).then(|| self.successes as f64 / self.episodes as f64)
    }

    /// Per-agent success rates; `None` before any episode completed.
    pub fn agent_rates(&self) -> Option<Vec<f64>> {
        (self.episodes > 0).then(|| self.agent_successes.iter().map(|&s| s as f64 / self.episodes as f64).collect())
    }

    pub fn mean_return(&self) -> Option<f64> {
        (self.episodes > 0).then(|| self.return_sum / self.episodes as f64)
    }

    pub fn merge(&mut self, other: &LevelOutcomeStats) {
        self.episodes += other.episodes;
        self.successes += other.successes;
        for (a, b) in self.agent_successes.iter_mut().zip(&other.agent_successes) {
            *a += b;
        }
        self.max_return = match (self.max_return, other.max_return) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        self.return_sum += other.return_sum;
    }
}

struct EnvSlot<'l, E: Environment> {
    level: &'l E::Level,
    state: E::State,
    stats: LevelOutcomeStats,
    /// Discounted return so far per agent.
    returns: Vec<f64>,
    discount: f64,
    reached: Vec<bool>,
    finished: bool,
}

impl<'l, E: Environment> EnvSlot<'l, E> {
    fn new(env: &E, level: &'l E::Level) -> Result<Self> {
        let n = env.num_agents();
        Ok(Self {
            level,
            state: env.reset(level)?,
            stats: LevelOutcomeStats::new(n),
            returns: vec![0.0; n],
            discount: 1.0,
            reached: vec![false; n],
            finished: false,
        })
    }

    fn end_episode(&mut self) {
        let n = self.returns.len();
        self.stats.episodes += 1;
        if self.reached.iter().all(|&r| r) {
            self.stats.successes += 1;
        }
        for (s, &r) in self.stats.agent_successes.iter_mut().zip(&self.reached) {
            *s += usize::from(r);
        }
        let ret = self.returns.iter().sum::<f64>() / n as f64;
        self.stats.return_sum += ret;
        self.stats.max_return = Some(self.stats.max_return.map_or(ret, |m| m.max(ret)));
        self.returns.iter_mut().for_each(|r| *r = 0.0);
        self.reached.iter_mut().for_each(|r| *r = false);
        self.discount = 1.0;
    }
}

/// Everything a rollout produced.
#[derive(Clone, Debug)]
pub struct Rollout {
    /// Empty when recording was not requested.
    pub batch: RolloutBatch,
    /// One entry per input level.
    pub stats: Vec<LevelOutcomeStats>,
}

/// Runs `n_steps` joint steps on each level (one environment per level),
/// resetting to the same level whenever an episode ends. With `record` the
/// full trajectory batch is kept for learning and scoring.
pub fn collect_rollout<E: Environment, P: Policy>(
    env: &E,
    policy: &P,
    levels: &[E::Level],
    n_steps: usize,
    gamma: f64,
    record: bool,
    rng: &mut SimRng,
) -> Result<Rollout> {
    let agents = env.num_agents();
    let width = env.action_space().width();
    let obs_dim = env.obs_dim();
    let n_lanes = levels.len() * agents;
    let mut lane_rngs = fork_many(rng, n_lanes);
    let mut slots: Vec<EnvSlot<E>> = levels.iter().map(|l| EnvSlot::new(env, l)).collect::<Result<_>>()?;
    let mut batch = if record {
        RolloutBatch::new(n_steps, n_lanes, agents, obs_dim, width)
    } else {
        RolloutBatch { agents_per_env: agents, obs_dim, act_width: width, ..RolloutBatch::default() }
    };
    let mut obs = vec![0.0; n_lanes * obs_dim];
    let mut act = ActBatch::default();

    for t in 0..n_steps {
        fill_obs(env, &slots, agents, obs_dim, &mut obs);
        policy.act(&obs, n_lanes, &mut lane_rngs, &mut act)?;
        let outcomes: Vec<_> = slots
            .par_iter_mut()
            .enumerate()
            .map(|(e, slot)| {
                let actions = &act.env_actions[e * agents * width..(e + 1) * agents * width];
                env.step(slot.level, &mut slot.state, actions)
            })
            .collect::<Result<_>>()?;

        for (e, (slot, out)) in slots.iter_mut().zip(outcomes).enumerate() {
            for a in 0..agents {
                let lane = e * agents + a;
                if out.active[a] {
                    slot.returns[a] += slot.discount * out.rewards[a];
                    slot.reached[a] |= out.reached_goal[a];
                }
                if record {
                    let i = batch.idx(t, lane);
                    batch.obs[i * obs_dim..(i + 1) * obs_dim]
                        .copy_from_slice(&obs[lane * obs_dim..(lane + 1) * obs_dim]);
                    batch.actions[i * width..(i + 1) * width]
                        .copy_from_slice(&act.raw[lane * width..(lane + 1) * width]);
                    batch.masks[i] = out.active[a];
                    if out.active[a] {
                        batch.log_probs[i] = act.log_probs[lane];
                        batch.values[i] = act.values[lane];
                        batch.rewards[i] = out.rewards[a];
                        batch.dones[i] = out.done[a] || out.episode_done;
                        batch.successes[i] = out.reached_goal[a];
                    } else {
                        batch.dones[i] = true;
                    }
                }
            }
            slot.discount *= gamma;
            if out.episode_done {
                slot.end_episode();
                slot.state = env.reset(slot.level)?;
            }
        }
    }

    if record {
        fill_obs(env, &slots, agents, obs_dim, &mut obs);
        let v = policy.values(&obs, n_lanes)?;
        let last = n_steps.saturating_sub(1);
        for (lane, &value) in v.iter().enumerate().take(n_lanes) {
            let done = n_steps == 0 || batch.dones[batch.idx(last, lane)];
            batch.bootstrap_values[lane] = if done { 0.0 } else { value };
        }
    }
    Ok(Rollout { batch, stats: slots.into_iter().map(|s| s.stats).collect() })
}

fn fill_obs<E: Environment>(env: &E, slots: &[EnvSlot<E>], agents: usize, obs_dim: usize, obs: &mut [f64]) {
    for (e, slot) in slots.iter().enumerate() {
        for a in 0..agents {
            let lane = e * agents + a;
            env.observe(slot.level, &slot.state, a, &mut obs[lane * obs_dim..(lane + 1) * obs_dim]);
        }
    }
}

/// Runs exactly `episodes` complete episodes on every level and returns
/// per-level outcome statistics. Episodes run in chunks of at most
/// `chunk_envs` parallel environments; each (level, episode) pair has its own
/// random stream, so the chunk size does not affect the result.
pub fn run_episodes<E: Environment, P: Policy>(
    env: &E,
    policy: &P,
    levels: &[E::Level],
    episodes: usize,
    chunk_envs: usize,
    rng: &mut SimRng,
) -> Result<Vec<LevelOutcomeStats>> {
    let agents = env.num_agents();
    let width = env.action_space().width();
    let obs_dim = env.obs_dim();
    let base: u64 = rng.random();
    let jobs: Vec<(usize, usize)> = (0..levels.len()).flat_map(|l| (0..episodes).map(move |k| (l, k))).collect();
    let mut stats: Vec<LevelOutcomeStats> = (0..levels.len()).map(|_| LevelOutcomeStats::new(agents)).collect();

    for chunk in jobs.chunks(chunk_envs.max(1)) {
        let mut slots: Vec<EnvSlot<E>> =
            chunk.iter().map(|&(l, _)| EnvSlot::new(env, &levels[l])).collect::<Result<_>>()?;
        let mut lane_rngs: Vec<SimRng> = chunk
            .iter()
            .flat_map(|&(l, k)| (0..agents).map(move |a| stream(base, &[l as u64, k as u64, a as u64])))
            .collect();
        let n_lanes = chunk.len() * agents;
        let mut obs = vec![0.0; n_lanes * obs_dim];
        let mut act = ActBatch::default();
        while slots.iter().any(|s| !s.finished) {
            fill_obs(env, &slots, agents, obs_dim, &mut obs);
            policy.act(&obs, n_lanes, &mut lane_rngs, &mut act)?;
            let outcomes: Vec<_> = slots
                .par_iter_mut()
                .enumerate()
                .map(|(e, slot)| {
                    if slot.finished {
                        return Ok(None);
                    }
                    let actions = &act.env_actions[e * agents * width..(e + 1) * agents * width];
                    env.step(slot.level, &mut slot.state, actions).map(Some)
                })
                .collect::<Result<_>>()?;
            for (slot, out) in slots.iter_mut().zip(outcomes) {
                let Some(out) = out else { continue };
                for a in 0..agents {
                    if out.active[a] {
                        slot.returns[a] += slot.discount * out.rewards[a];
                        slot.reached[a] |= out.reached_goal[a];
                    }
                }
                if out.episode_done {
                    slot.end_episode();
                    slot.finished = true;
                }
            }
        }
        for (slot, &(l, _)) in slots.iter().zip(chunk) {
            stats[l].merge(&slot.stats);
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::GridMazeEnv;
    use crate::grid::GridMap;
    use crate::gridmaze::{Direction, MazeConfig, MazeLevel};
    use crate::learner::NetShape;
    use crate::level::GenParams;

    /// Always moves forward.
    struct Forward;

    impl Policy for Forward {
        fn act(&self, _obs: &[f64], rows: usize, _rngs: &mut [SimRng], out: &mut ActBatch) -> Result<()> {
            out.resize(rows, 1);
            out.raw.iter_mut().for_each(|a| *a = 2.0);
            out.env_actions.iter_mut().for_each(|a| *a = 2.0);
            out.log_probs.iter_mut().for_each(|l| *l = 0.0);
            out.values.iter_mut().for_each(|v| *v = 0.5);
            Ok(())
        }

        fn values(&self, _obs: &[f64], rows: usize) -> Result<Vec<f64>> {
            Ok(vec![0.5; rows])
        }
    }

    fn corridor(goal_x: usize) -> MazeLevel {
        MazeLevel {
            grid: GridMap::empty(7, 3, 1.0).unwrap(),
            start: (1, 1),
            start_dir: Direction::East,
            goal: (goal_x, 1),
        }
    }

    fn env(max_steps: u32) -> GridMazeEnv {
        GridMazeEnv::new(MazeConfig { max_steps, ..MazeConfig::default() }, GenParams::gridmaze(7, 0)).unwrap()
    }

    #[test]
    fn scripted_policy_reaches_adjacent_goal() {
        let stats = run_episodes(&env(10), &Forward, &[corridor(2)], 10, 4, &mut stream(0, &[])).unwrap();
        assert_eq!(stats[0].success_rate(), Some(1.0));
        assert_eq!(stats[0].episodes, 10);
    }

    #[test]
    fn unreachable_goal_scores_zero() {
        let mut lvl = corridor(5);
        lvl.grid.set_wall((3, 1), true).unwrap();
        let stats = run_episodes(&env(10), &Forward, &[lvl], 3, 4, &mut stream(0, &[])).unwrap();
        assert_eq!(stats[0].success_rate(), Some(0.0));
    }

    #[test]
    fn rollout_auto_resets() {
        // goal three steps away: episodes end at t = 2, 5, 8
        let out = collect_rollout(&env(50), &Forward, &[corridor(4)], 10, 0.99, true, &mut stream(0, &[])).unwrap();
        let b = &out.batch;
        let dones: Vec<usize> = (0..10).filter(|&t| b.dones[b.idx(t, 0)]).collect();
        assert_eq!(dones, vec![2, 5, 8]);
        assert_eq!(out.stats[0].episodes, 3);
        assert_eq!(out.stats[0].successes, 3);
        assert_eq!(b.bootstrap_values[0], 0.5);
        let r = 1.0 - 0.9 * 2.0 / 50.0;
        assert!((out.stats[0].max_return.unwrap() - 0.99f64.powi(2) * r).abs() < 1e-12);
    }

    #[test]
    fn chunking_does_not_change_results() {
        let e =
            GridMazeEnv::new(MazeConfig { max_steps: 30, ..MazeConfig::default() }, GenParams::gridmaze(7, 5)).unwrap();
        let shape = NetShape { obs_dim: e.obs_dim(), hidden: 16, head: HeadKind::Discrete(3) };
        let params = PolicyParams::init(shape, &mut stream(1, &[]));
        let pol = NetPolicy::new(&params, e.action_space()).unwrap();
        let mut rng = stream(2, &[]);
        let levels: Vec<_> = (0..7).map(|_| e.sample_level(&mut rng).unwrap()).collect();
        let a = run_episodes(&e, &pol, &levels, 5, 3, &mut stream(3, &[])).unwrap();
        let b = run_episodes(&e, &pol, &levels, 5, 100, &mut stream(3, &[])).unwrap();
        assert_eq!(a, b);
    }
}
