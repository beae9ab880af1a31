//! Common interface over the simulators so rollouts, curricula and evaluation
//! are written once.

use std::fmt::Debug;
use std::hash::Hash;

use crate::gridmaze::{maze_observe, maze_step, MazeAction, MazeConfig, MazeEvent, MazeLevel, MazeState};
use crate::jaxnav::{
    env_step, make_observation, reset_states, JaxNavLevel, NavAction, NavConfig, RobotState, StepEvent,
};
use crate::level::{all_solvable, generate_jaxnav, EnvKind, MAX_SOLVABLE_ATTEMPTS};
use crate::level::{generate_maze, mutate_level, serialize_level, GenParams, LevelSpec};
use crate::rng::SimRng;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ActionSpace {
    /// Actions are indices, passed to [`Environment::step`] as `f64`.
    Discrete(usize),
    /// Box bounds per action dimension.
    Continuous { low: Vec<f64>, high: Vec<f64> },
}

impl ActionSpace {
    /// Floats per agent action.
    pub fn width(&self) -> usize {
        match self {
            ActionSpace::Discrete(_) => 1,
            ActionSpace::Continuous { low, .. } => low.len(),
        }
    }
}

/// Per-agent result of one joint step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub rewards: Vec<f64>,
    /// Agent finished on this step or earlier.
    pub done: Vec<bool>,
    /// Agent acted on this step (it was not already done).
    pub active: Vec<bool>,
    /// Agent reached its goal on this step.
    pub reached_goal: Vec<bool>,
    pub episode_done: bool,
}

pub trait Environment: Sync {
    type Level: Clone + Debug + Eq + Hash + Send + Sync;
    type State: Clone + Send + Sync;

    fn obs_dim(&self) -> usize;
    fn action_space(&self) -> ActionSpace;
    /// Agents per level; fixed for a given environment instance.
    fn num_agents(&self) -> usize;

    fn reset(&self, level: &Self::Level) -> Result<Self::State>;
    fn observe(&self, level: &Self::Level, state: &Self::State, agent: usize, out: &mut [f64]);
    /// `actions` holds `num_agents * action_space().width()` values.
    fn step(&self, level: &Self::Level, state: &mut Self::State, actions: &[f64]) -> Result<StepOutcome>;

    fn sample_level(&self, rng: &mut SimRng) -> Result<Self::Level>;
    fn sample_solvable_level(&self, rng: &mut SimRng) -> Result<Self::Level>;
    fn mutate(&self, level: &Self::Level, n_edits: usize, rng: &mut SimRng) -> Self::Level;

    /// Level in the text file format.
    fn level_text(&self, level: &Self::Level) -> String;
    fn level_from_spec(&self, spec: &LevelSpec) -> Result<Self::Level>;
}

fn solvable_by<L>(mut draw: impl FnMut() -> Result<L>, ok: impl Fn(&L) -> bool) -> Result<L> {
    for _ in 0..MAX_SOLVABLE_ATTEMPTS {
        let level = draw()?;
        if ok(&level) {
            return Ok(level);
        }
    }
    Err(Error::Generation(format!("no solvable level in {MAX_SOLVABLE_ATTEMPTS} attempts")))
}

/// The continuous navigation world.
#[derive(Clone, Debug)]
pub struct JaxNavEnv {
    pub cfg: NavConfig,
    pub gen: GenParams,
}

#[derive(Clone, Debug)]
pub struct JaxNavState {
    pub robots: Vec<RobotState>,
    /// Latest flattened observation per robot.
    obs: Vec<Vec<f64>>,
}

impl JaxNavEnv {
    pub fn new(cfg: NavConfig, gen: GenParams) -> Result<Self> {
        cfg.validate()?;
        gen.validate()?;
        if gen.env_kind != EnvKind::Jaxnav {
            return Err(Error::Argument("generator is not for the navigation world".into()));
        }
        Ok(Self { cfg, gen })
    }
}

impl Environment for JaxNavEnv {
    type Level = JaxNavLevel;
    type State = JaxNavState;

    fn obs_dim(&self) -> usize {
        self.cfg.obs_dim()
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Continuous {
            low: vec![self.cfg.min_linear_vel, -self.cfg.max_angular_vel],
            high: vec![self.cfg.max_linear_vel, self.cfg.max_angular_vel],
        }
    }

    fn num_agents(&self) -> usize {
        self.gen.n_agents
    }

    fn reset(&self, level: &JaxNavLevel) -> Result<JaxNavState> {
        if level.tasks.len() != self.num_agents() {
            return Err(Error::Arity { what: "level agents", expected: self.num_agents(), got: level.tasks.len() });
        }
        let robots = reset_states(level);
        let obs = robots
            .iter()
            .zip(&level.tasks)
            .map(|(r, t)| make_observation(&level.map, r, t.goal(), &self.cfg).map(|o| o.to_vec()))
            .collect::<Result<_>>()?;
        Ok(JaxNavState { robots, obs })
    }

    fn observe(&self, _level: &JaxNavLevel, state: &JaxNavState, agent: usize, out: &mut [f64]) {
        out.copy_from_slice(&state.obs[agent]);
    }

    fn step(&self, level: &JaxNavLevel, state: &mut JaxNavState, actions: &[f64]) -> Result<StepOutcome> {
        let n = level.tasks.len();
        if actions.len() != 2 * n {
            return Err(Error::Arity { what: "action values", expected: 2 * n, got: actions.len() });
        }
        let acts: Vec<NavAction> = actions.chunks(2).map(|a| NavAction::new(a[0], a[1])).collect();
        let active: Vec<bool> = state.robots.iter().map(|r| !r.done).collect();
        let out = env_step(level, &state.robots, &acts, &self.cfg)?;
        for (slot, o) in state.obs.iter_mut().zip(&out.observations) {
            o.write_flat(slot);
        }
        state.robots = out.states;
        Ok(StepOutcome {
            rewards: out.rewards,
            done: out.dones,
            active,
            reached_goal: out.events.iter().map(|e| *e == StepEvent::GoalReached).collect(),
            episode_done: out.episode_done,
        })
    }

    fn sample_level(&self, rng: &mut SimRng) -> Result<JaxNavLevel> {
        generate_jaxnav(&self.gen, rng)
    }

    fn sample_solvable_level(&self, rng: &mut SimRng) -> Result<JaxNavLevel> {
        solvable_by(|| generate_jaxnav(&self.gen, rng), all_solvable)
    }

    fn mutate(&self, level: &JaxNavLevel, n_edits: usize, rng: &mut SimRng) -> JaxNavLevel {
        mutate_level(level, n_edits, rng)
    }

    fn level_text(&self, level: &JaxNavLevel) -> String {
        serialize_level(&LevelSpec::JaxNav(level.clone()))
    }

    fn level_from_spec(&self, spec: &LevelSpec) -> Result<JaxNavLevel> {
        match spec {
            LevelSpec::JaxNav(l) if l.tasks.len() == self.num_agents() => Ok(l.clone()),
            LevelSpec::JaxNav(l) => Err(Error::Compatibility(format!(
                "level has {} agents, environment expects {}",
                l.tasks.len(),
                self.num_agents()
            ))),
            LevelSpec::GridMaze(_) => Err(Error::Compatibility("maze level given to the navigation world".into())),
        }
    }
}

/// The grid maze.
#[derive(Clone, Debug)]
pub struct GridMazeEnv {
    pub cfg: MazeConfig,
    pub gen: GenParams,
}

impl GridMazeEnv {
    pub fn new(cfg: MazeConfig, gen: GenParams) -> Result<Self> {
        cfg.validate()?;
        gen.validate()?;
        if gen.env_kind != EnvKind::Gridmaze {
            return Err(Error::Argument("generator is not for the maze".into()));
        }
        Ok(Self { cfg, gen })
    }
}

impl Environment for GridMazeEnv {
    type Level = MazeLevel;
    type State = MazeState;

    fn obs_dim(&self) -> usize {
        self.cfg.obs_dim()
    }

    fn action_space(&self) -> ActionSpace {
        ActionSpace::Discrete(MazeAction::COUNT)
    }

    fn num_agents(&self) -> usize {
        1
    }

    fn reset(&self, level: &MazeLevel) -> Result<MazeState> {
        Ok(MazeState::initial(level))
    }

    fn observe(&self, level: &MazeLevel, state: &MazeState, _agent: usize, out: &mut [f64]) {
        maze_observe(level, state, &self.cfg).write_flat(out);
    }

    fn step(&self, level: &MazeLevel, state: &mut MazeState, actions: &[f64]) -> Result<StepOutcome> {
        if actions.len() != 1 {
            return Err(Error::Arity { what: "action values", expected: 1, got: actions.len() });
        }
        let a = actions[0];
        if !(a >= 0.0 && a.fract() == 0.0) {
            return Err(Error::Argument(format!("maze action {a} is not an index")));
        }
        let out = maze_step(level, state, MazeAction::from_index(a as usize)?, &self.cfg)?;
        *state = out.state;
        Ok(StepOutcome {
            rewards: vec![out.reward],
            done: vec![out.done],
            active: vec![true],
            reached_goal: vec![out.event == MazeEvent::GoalReached],
            episode_done: out.done,
        })
    }

    fn sample_level(&self, rng: &mut SimRng) -> Result<MazeLevel> {
        generate_maze(&self.gen, rng)
    }

    fn sample_solvable_level(&self, rng: &mut SimRng) -> Result<MazeLevel> {
        solvable_by(|| generate_maze(&self.gen, rng), all_solvable)
    }

    fn mutate(&self, level: &MazeLevel, n_edits: usize, rng: &mut SimRng) -> MazeLevel {
        mutate_level(level, n_edits, rng)
    }

    fn level_text(&self, level: &MazeLevel) -> String {
        serialize_level(&LevelSpec::GridMaze(level.clone()))
    }

    fn level_from_spec(&self, spec: &LevelSpec) -> Result<MazeLevel> {
        match spec {
            LevelSpec::GridMaze(l) => Ok(l.clone()),
            LevelSpec::JaxNav(_) => Err(Error::Compatibility("navigation level given to the maze".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn jaxnav_observations_track_steps() {
        let env = JaxNavEnv::new(NavConfig::default(), GenParams { n_agents: 2, ..GenParams::default() }).unwrap();
        let mut rng = stream(0, &[]);
        let level = env.sample_level(&mut rng).unwrap();
        let mut state = env.reset(&level).unwrap();
        let mut buf = vec![0.0; env.obs_dim()];
        env.observe(&level, &state, 1, &mut buf);
        let expected = make_observation(&level.map, &state.robots[1], level.tasks[1].goal(), &env.cfg).unwrap();
        assert_eq!(buf, expected.to_vec());

        let out = env.step(&level, &mut state, &[1.0, 0.3, 0.5, -0.2]).unwrap();
        assert_eq!(out.active, vec![true, true]);
        env.observe(&level, &state, 0, &mut buf);
        let expected = make_observation(&level.map, &state.robots[0], level.tasks[0].goal(), &env.cfg).unwrap();
        assert_eq!(buf, expected.to_vec());
        assert!(env.step(&level, &mut state, &[1.0]).is_err());
    }

    #[test]
    fn maze_rejects_fractional_actions() {
        let env = GridMazeEnv::new(MazeConfig::default(), GenParams::gridmaze(9, 20)).unwrap();
        let level = env.sample_level(&mut stream(1, &[])).unwrap();
        let mut state = env.reset(&level).unwrap();
        assert!(env.step(&level, &mut state, &[0.5]).is_err());
        assert!(env.step(&level, &mut state, &[3.0]).is_err());
        env.step(&level, &mut state, &[2.0]).unwrap();
    }

    #[test]
    fn level_kind_mismatch_is_a_compatibility_error() {
        let maze = GridMazeEnv::new(MazeConfig::default(), GenParams::gridmaze(9, 20)).unwrap();
        let nav = JaxNavEnv::new(NavConfig::default(), GenParams::default()).unwrap();
        let spec = LevelSpec::JaxNav(nav.sample_level(&mut stream(2, &[])).unwrap());
        assert!(matches!(maze.level_from_spec(&spec), Err(Error::Compatibility(_))));
        assert!(nav.level_from_spec(&spec).is_ok());
    }
}
