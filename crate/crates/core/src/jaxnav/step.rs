use std::f64::consts::PI;

use super::{
    compute_reward, footprint_collides, lidar_scan, step_dynamics, wrap_angle, JaxNavLevel, NavAction, NavConfig,
    NavObservation, RobotState, StepEvent,
};
use crate::grid::GridMap;
use crate::{Error, Result};

/// Everything produced by one joint step.
#[derive(Clone, Debug)]
pub struct NavStepOutput {
    pub states: Vec<RobotState>,
    pub observations: Vec<NavObservation>,
    /// Individual rewards before team mixing.
    pub individual_rewards: Vec<f64>,
    /// Rewards after mixing, `λ r_i + (1 - λ) Σ_j r_j`.
    pub rewards: Vec<f64>,
    pub dones: Vec<bool>,
    pub events: Vec<StepEvent>,
    pub episode_done: bool,
}

/// Robots placed at their start poses, at rest.
pub fn reset_states(level: &JaxNavLevel) -> Vec<RobotState> {
    level.tasks.iter().map(|t| RobotState::at_rest(t.start_x, t.start_y, t.start_heading)).collect()
}

/// Normalised observation of one robot.
pub fn make_observation(
    map: &GridMap,
    state: &RobotState,
    goal: (f64, f64),
    cfg: &NavConfig,
) -> Result<NavObservation> {
    let ranges = lidar_scan(map, state.x, state.y, state.heading, cfg)?;
    Ok(observation_from_scan(&ranges, state, goal, cfg))
}

fn observation_from_scan(ranges: &[f64], state: &RobotState, goal: (f64, f64), cfg: &NavConfig) -> NavObservation {
    let lidar = ranges.iter().map(|r| (r / cfg.lidar_max_m).clamp(0.0, 1.0)).collect();
    let (gx, gy) = (goal.0 - state.x, goal.1 - state.y);
    // Goal vectors longer than the LiDAR range are shortened to it.
    let dist = gx.hypot(gy).min(cfg.lidar_max_m);
    let bearing = if dist > 0.0 { wrap_angle(gy.atan2(gx) - state.heading) } else { 0.0 };
    NavObservation {
        lidar,
        goal_polar: (dist / cfg.lidar_max_m, bearing / PI),
        vel: (state.linear_vel / cfg.max_linear_vel, state.angular_vel / cfg.max_angular_vel),
    }
}

/// Advances every live robot by one timestep.
///
/// Robots that were already done stay frozen, take no part in collision
/// checks and receive zero reward. Goal arrival is checked before
/// collisions, collisions before the timeout.
pub fn env_step(
    level: &JaxNavLevel,
    states: &[RobotState],
    actions: &[NavAction],
    cfg: &NavConfig,
) -> Result<NavStepOutput> {
    let n = level.tasks.len();
    if states.len() != n {
        return Err(Error::Arity { what: "robot states", expected: n, got: states.len() });
    }
    if actions.len() != n {
        return Err(Error::Arity { what: "actions", expected: n, got: actions.len() });
    }

    let live: Vec<bool> = states.iter().map(|s| !s.done).collect();
    let mut next: Vec<RobotState> = states
        .iter()
        .zip(actions)
        .map(|(s, &a)| {
            if s.done {
                *s
            } else {
                let mut ns = step_dynamics(s, a, cfg);
                ns.steps_taken += 1;
                ns
            }
        })
        .collect();

    let mut collided: Vec<bool> =
        (0..n).map(|i| live[i] && footprint_collides(&level.map, next[i].x, next[i].y, cfg)).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if live[i] && live[j] {
                let d = (next[i].x - next[j].x).hypot(next[i].y - next[j].y);
                if d < cfg.agent_width_m {
                    collided[i] = true;
                    collided[j] = true;
                }
            }
        }
    }

    let mut scans = Vec::with_capacity(n);
    for s in &next {
        scans.push(lidar_scan(&level.map, s.x, s.y, s.heading, cfg)?);
    }

    let mut events = vec![StepEvent::None; n];
    let mut individual = vec![0.0; n];
    for i in 0..n {
        if !live[i] {
            continue;
        }
        let goal = level.tasks[i].goal();
        let dist = (next[i].x - goal.0).hypot(next[i].y - goal.1);
        events[i] = if dist < cfg.goal_radius_m {
            StepEvent::GoalReached
        } else if collided[i] {
            StepEvent::Collision
        } else if next[i].steps_taken >= cfg.max_episode_steps {
            StepEvent::Timeout
        } else {
            StepEvent::None
        };
        let min_lidar = scans[i].iter().copied().fold(cfg.lidar_max_m, f64::min);
        individual[i] = compute_reward(&states[i], &next[i], events[i], min_lidar, goal, cfg);
        if events[i] != StepEvent::None {
            next[i].done = true;
        }
    }

    let team: f64 = individual.iter().sum();
    let lambda = cfg.reward_mix_lambda;
    let rewards = (0..n).map(|i| if live[i] { lambda * individual[i] + (1.0 - lambda) * team } else { 0.0 }).collect();

    let observations = (0..n).map(|i| observation_from_scan(&scans[i], &next[i], level.tasks[i].goal(), cfg)).collect();
    let dones: Vec<bool> = next.iter().map(|s| s.done).collect();
    let episode_done = dones.iter().all(|&d| d);

    Ok(NavStepOutput {
        states: next,
        observations,
        individual_rewards: individual,
        rewards,
        dones,
        events,
        episode_done,
    })
}
