//! Finite-difference check of the PPO loss gradient.

use super::network::PolicyParams;
use super::ppo::{loss_and_grad, Minibatch, PpoConfig};
use crate::Result;

/// Gradient magnitudes below this are compared in absolute rather than
/// relative terms, so parameters with a (near) zero gradient do not turn
/// rounding noise into large relative errors.
pub const GRAD_CHECK_FLOOR: f64 = 1e-6;

/// Largest relative error between the analytic gradient and central
/// differences with step `eps`, over every parameter.
pub fn grad_check(params: &PolicyParams, mb: &Minibatch, cfg: &PpoConfig, eps: f64) -> Result<f64> {
    grad_check_with(params, mb, cfg, eps, |_| {})
}

/// As [`grad_check`], with `corrupt` applied to the analytic gradient first.
pub fn grad_check_with(
    params: &PolicyParams,
    mb: &Minibatch,
    cfg: &PpoConfig,
    eps: f64,
    corrupt: impl Fn(&mut Vec<f64>),
) -> Result<f64> {
    let mut analytic = loss_and_grad(params, mb, cfg, true)?.1.expect("gradient requested");
    corrupt(&mut analytic);
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for (i, &a) in analytic.iter().enumerate() {
        let w = params.theta[i];
        probe.theta[i] = w + eps;
        let up = loss_and_grad(&probe, mb, cfg, false)?.0.total;
        probe.theta[i] = w - eps;
        let down = loss_and_grad(&probe, mb, cfg, false)?.0.total;
        probe.theta[i] = w;
        let numeric = (up - down) / (2.0 * eps);
        let scale = a.abs().max(numeric.abs()).max(GRAD_CHECK_FLOOR);
        worst = worst.max((a - numeric).abs() / scale);
    }
    Ok(worst)
}
