//! Orchestration for training, evaluating and analysing curricula.

pub mod analyze;
pub mod config;
pub mod evaluate;
pub mod levels;
pub mod plot;
pub mod train;
