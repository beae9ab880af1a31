//! Continuous 2D navigation with LiDAR sensing and differential-drive robots.
//!
//! One or more square robots move through a walled occupancy grid towards
//! per-robot goals. Each robot observes a 360° LiDAR scan, the polar
//! direction of its goal and its own velocities, and commands target linear
//! and angular velocities that are tracked under acceleration limits.

mod dynamics;
mod lidar;
mod reward;
mod step;

use std::f64::consts::PI;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, GridMap};
use crate::{Error, Result};

pub use dynamics::{footprint_collides, step_dynamics};
pub use lidar::lidar_scan;
pub use reward::compute_reward;
pub use step::{env_step, make_observation, reset_states, NavStepOutput};

/// Sign convention for the distance-shaping reward term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapingSign {
    /// `w_g * (d_prev - d_next)`: moving towards the goal is rewarded.
    TowardGoalPositive,
    /// `w_g * (d_next - d_prev)`: the opposite convention, kept for
    /// comparison runs.
    AwayFromGoalPositive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NavConfig {
    pub beam_count: usize,
    pub lidar_max_m: f64,
    pub lidar_resolution_m: f64,
    pub dt_s: f64,
    pub min_linear_vel: f64,
    pub max_linear_vel: f64,
    pub max_angular_vel: f64,
    pub max_lin_acc: f64,
    pub max_ang_acc: f64,
    pub agent_width_m: f64,
    pub goal_radius_m: f64,
    pub goal_reward: f64,
    pub goal_distance_weight: f64,
    pub collision_reward: f64,
    pub close_reward: f64,
    pub close_distance_m: f64,
    pub time_reward: f64,
    pub reward_mix_lambda: f64,
    pub max_episode_steps: u32,
    pub shaping_sign: ShapingSign,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            beam_count: 200,
            lidar_max_m: 6.0,
            lidar_resolution_m: 0.05,
            dt_s: 0.1,
            min_linear_vel: 0.0,
            max_linear_vel: 1.0,
            max_angular_vel: 0.6,
            max_lin_acc: 1.0,
            max_ang_acc: 1.0,
            agent_width_m: 0.5,
            goal_radius_m: 0.3,
            goal_reward: 4.0,
            goal_distance_weight: 0.25,
            collision_reward: -4.0,
            close_reward: -0.1,
            close_distance_m: 0.4,
            time_reward: -0.01,
            reward_mix_lambda: 0.5,
            max_episode_steps: 500,
            shaping_sign: ShapingSign::TowardGoalPositive,
        }
    }
}

impl NavConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lidar_max_m", self.lidar_max_m),
            ("lidar_resolution_m", self.lidar_resolution_m),
            ("dt_s", self.dt_s),
            ("max_linear_vel", self.max_linear_vel),
            ("max_angular_vel", self.max_angular_vel),
            ("max_lin_acc", self.max_lin_acc),
            ("max_ang_acc", self.max_ang_acc),
            ("agent_width_m", self.agent_width_m),
            ("goal_radius_m", self.goal_radius_m),
            ("close_distance_m", self.close_distance_m),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.beam_count == 0 {
            return Err(Error::Argument("beam_count must be positive".into()));
        }
        if self.time_reward >= 0.0 {
            return Err(Error::Argument("time_reward must be negative".into()));
        }
        if !(0.0..=1.0).contains(&self.reward_mix_lambda) {
            return Err(Error::Argument("reward_mix_lambda must lie in [0, 1]".into()));
        }
        if !(self.min_linear_vel >= 0.0 && self.min_linear_vel < self.max_linear_vel) {
            return Err(Error::Argument("min_linear_vel must lie in [0, max_linear_vel)".into()));
        }
        if self.max_episode_steps == 0 {
            return Err(Error::Argument("max_episode_steps must be positive".into()));
        }
        Ok(())
    }

    /// Length of a flattened observation: beams, goal (distance, bearing),
    /// velocities (linear, angular).
    pub fn obs_dim(&self) -> usize {
        self.beam_count + 4
    }
}

/// Pose and velocities of one robot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    /// Radians in (-π, π].
    pub heading: f64,
    pub linear_vel: f64,
    pub angular_vel: f64,
    pub done: bool,
    pub steps_taken: u32,
}

impl RobotState {
    pub fn at_rest(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading, linear_vel: 0.0, angular_vel: 0.0, done: false, steps_taken: 0 }
    }
}

/// Start pose and goal of one robot.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AgentTask {
    pub start_x: f64,
    pub start_y: f64,
    pub start_heading: f64,
    pub goal_x: f64,
    pub goal_y: f64,
}

impl AgentTask {
    fn bits(&self) -> [u64; 5] {
        [
            self.start_x.to_bits(),
            self.start_y.to_bits(),
            self.start_heading.to_bits(),
            self.goal_x.to_bits(),
            self.goal_y.to_bits(),
        ]
    }

    pub fn goal(&self) -> (f64, f64) {
        (self.goal_x, self.goal_y)
    }
}

impl PartialEq for AgentTask {
    fn eq(&self, other: &Self) -> bool {
        self.bits() == other.bits()
    }
}

impl Eq for AgentTask {}

impl Hash for AgentTask {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.bits().hash(state);
    }
}

/// A navigation level: the map plus one task per robot.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JaxNavLevel {
    pub map: GridMap,
    pub tasks: Vec<AgentTask>,
}

impl JaxNavLevel {
    /// Checks that starts and goals sit in free interior cells and that no
    /// two start footprints overlap.
    pub fn validate(&self, cfg: &NavConfig) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::Argument("level has no agents".into()));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            for (what, x, y) in [("start", t.start_x, t.start_y), ("goal", t.goal_x, t.goal_y)] {
                match self.map.cell_of(x, y) {
                    Some(c) if self.map.is_interior(c) && !self.map.is_wall(c) => {}
                    _ => {
                        return Err(Error::Argument(format!(
                            "agent {i} {what} ({x}, {y}) is not in a free interior cell"
                        )))
                    }
                }
            }
        }
        for i in 0..self.tasks.len() {
            for j in (i + 1)..self.tasks.len() {
                let (a, b) = (&self.tasks[i], &self.tasks[j]);
                if (a.start_x - b.start_x).abs() < cfg.agent_width_m
                    && (a.start_y - b.start_y).abs() < cfg.agent_width_m
                {
                    return Err(Error::Argument(format!("agents {i} and {j} start overlapping")));
                }
            }
        }
        Ok(())
    }

    pub fn start_cell(&self, agent: usize) -> Option<Cell> {
        let t = &self.tasks[agent];
        self.map.cell_of(t.start_x, t.start_y)
    }

    pub fn goal_cell(&self, agent: usize) -> Option<Cell> {
        let t = &self.tasks[agent];
        self.map.cell_of(t.goal_x, t.goal_y)
    }
}

/// Normalised observation of one robot.
#[derive(Clone, Debug, PartialEq)]
pub struct NavObservation {
    /// Ranges divided by the LiDAR maximum, in [0, 1].
    pub lidar: Vec<f64>,
    /// Goal distance in [0, 1] and bearing relative to heading in [-1, 1].
    pub goal_polar: (f64, f64),
    /// Linear and angular velocity divided by their maxima.
    pub vel: (f64, f64),
}

impl NavObservation {
    pub fn write_flat(&self, out: &mut [f64]) {
        let n = self.lidar.len();
        out[..n].copy_from_slice(&self.lidar);
        out[n] = self.goal_polar.0;
        out[n + 1] = self.goal_polar.1;
        out[n + 2] = self.vel.0;
        out[n + 3] = self.vel.1;
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.lidar.len() + 4];
        self.write_flat(&mut v);
        v
    }
}

/// Commanded target velocities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NavAction {
    pub target_linear: f64,
    pub target_angular: f64,
}

impl NavAction {
    pub fn new(target_linear: f64, target_angular: f64) -> Self {
        Self { target_linear, target_angular }
    }

    pub fn clipped(self, cfg: &NavConfig) -> Self {
        Self {
            target_linear: clamp_finite(self.target_linear, cfg.min_linear_vel, cfg.max_linear_vel),
            target_angular: clamp_finite(self.target_angular, -cfg.max_angular_vel, cfg.max_angular_vel),
        }
    }
}

fn clamp_finite(v: f64, lo: f64, hi: f64) -> f64 {
    if v.is_nan() {
        lo.max(0.0).min(hi)
    } else {
        v.clamp(lo, hi)
    }
}

/// Per-robot outcome of one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepEvent {
    None,
    GoalReached,
    Collision,
    Timeout,
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}
