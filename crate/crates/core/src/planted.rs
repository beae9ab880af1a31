//! A diagnostic environment whose levels carry a planted success probability.
//!
//! Each episode lasts `episode_len` steps; on the last step the agent
//! succeeds if it chooses action 1. The observation is the planted
//! probability itself, so [`ScriptedPolicy`], which picks action 1 with that
//! probability, realises exactly the planted success rate. Useful for testing
//! curricula without any learning in the loop.

use rand::Rng;

use crate::env::{ActionSpace, Environment, StepOutcome};
use crate::level::LevelSpec;
use crate::rng::SimRng;
use crate::rollout::{ActBatch, Policy};
use crate::{Error, Result};

/// Probabilities are stored in thousandths so levels stay hashable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PlantedLevel {
    pub id: u64,
    pub p_milli: u16,
}

impl PlantedLevel {
    pub fn p(&self) -> f64 {
        f64::from(self.p_milli) / 1000.0
    }
}

#[derive(Clone, Debug)]
pub struct PlantedEnv {
    pub episode_len: u32,
}

impl Default for PlantedEnv {
    fn default() -> Self {
        Self { episode_len: 1 }
    }
}

impl Environment for PlantedEnv {
    type Level = PlantedLevel;
    type State = u32;

    fn obs_dim(&self) -> usize {
        1
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(2)
    }

    fn num_agents(&self) -> usize {
        1
    }

    fn reset(&self, _level: &PlantedLevel) -> Result<u32> {
        Ok(0)
    }

    fn observe(&self, level: &PlantedLevel, _state: &u32, _agent: usize, out: &mut [f64]) {
        out[0] = level.p();
    }

    fn step(&self, _level: &PlantedLevel, state: &mut u32, actions: &[f64]) -> Result<StepOutcome> {
        *state += 1;
        let done = *state >= self.episode_len;
        let success = done && actions[0] == 1.0;
        Ok(StepOutcome {
            rewards: vec![f64::from(u8::from(success))],
            done: vec![done],
            active: vec![true],
            reached_goal: vec![success],
            episode_done: done,
        })
    }

    fn sample_level(&self, rng: &mut SimRng) -> Result<PlantedLevel> {
        Ok(PlantedLevel { id: rng.random(), p_milli: rng.random_range(0..=1000) })
    }

    fn sample_solvable_level(&self, rng: &mut SimRng) -> Result<PlantedLevel> {
        self.sample_level(rng)
    }

    fn mutate(&self, level: &PlantedLevel, n_edits: usize, rng: &mut SimRng) -> PlantedLevel {
        let mut l = *level;
        for _ in 0..n_edits {
            l.p_milli = (i32::from(l.p_milli) + rng.random_range(-50..=50)).clamp(0, 1000) as u16;
        }
        l.id = rng.random();
        l
    }

    fn level_text(&self, level: &PlantedLevel) -> String {
        format!("planted {} {}", level.id, level.p())
    }

    fn level_from_spec(&self, spec: &LevelSpec) -> Result<PlantedLevel> {
        Err(Error::Compatibility(format!("planted levels cannot be built from {} levels", spec.kind().name())))
    }
}

/// Chooses action 1 with the observed probability; reports a constant value.
#[derive(Clone, Copy, Debug)]
pub struct ScriptedPolicy {
    pub value: f64,
}

impl Policy for ScriptedPolicy {
    fn act(&self, obs: &[f64], rows: usize, rngs: &mut [SimRng], out: &mut ActBatch) -> Result<()> {
        out.raw.resize(rows, 0.0);
        out.env_actions.resize(rows, 0.0);
        out.log_probs.resize(rows, 0.0);
        out.values.resize(rows, 0.0);
        for (i, rng) in rngs.iter_mut().enumerate().take(rows) {
            let p = obs[i];
            let a = rng.random::<f64>() < p;
            out.raw[i] = f64::from(u8::from(a));
            out.env_actions[i] = out.raw[i];
            out.log_probs[i] = if a { p.ln() } else { (1.0 - p).ln() };
            out.values[i] = self.value;
        }
        Ok(())
    }

    fn values(&self, _obs: &[f64], rows: usize) -> Result<Vec<f64>> {
        Ok(vec![self.value; rows])
    }
}
