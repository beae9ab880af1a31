//! Actor-critic MLP with a hand-written backward pass, GAE and PPO.

mod batch;
pub mod checkpoint;
pub mod distribution;
mod gae;
mod gradcheck;
mod network;
mod ppo;

pub use batch::RolloutBatch;
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gae::{compute_gae, gae_lane, td_errors};
pub use gradcheck::{grad_check, grad_check_with, GRAD_CHECK_FLOOR};
pub use network::{AdamState, ForwardOut, HeadKind, NetShape, PolicyParams, LOG_STD_MAX, LOG_STD_MIN};
pub use ppo::{adam_step, clip_grad_norm, loss_and_grad, ppo_update, LossParts, Minibatch, PpoConfig, PpoStats};
