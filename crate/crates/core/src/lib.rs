//! Autocurriculum reinforcement learning on binary-outcome navigation tasks.
//!
//! The crate bundles two simulators (a continuous LiDAR navigation world and a
//! partially observable grid maze), level tooling, a from-scratch PPO learner,
//! curriculum schedulers that choose which levels to train on, and the
//! worst-case evaluation protocol used to compare them.
//!
//! Every stochastic component draws from [`rng::SimRng`] streams derived from a
//! run seed, so results do not depend on how work is scheduled across threads.

pub mod curricula;
pub mod env;
pub mod error;
pub mod eval;
pub mod grid;
pub mod gridmaze;
pub mod jaxnav;
pub mod learner;
pub mod level;
pub mod planted;
pub mod rng;
pub mod rollout;

pub use error::{Error, Result};
