use super::{wrap_angle, NavAction, NavConfig, RobotState};
use crate::grid::GridMap;

/// Differential-drive update with acceleration limits.
///
/// Velocities move towards the (clipped) targets by at most `max_acc * dt`
/// and stay inside their ranges; the pose is then integrated with the new
/// velocities along the previous heading (semi-implicit Euler).
pub fn step_dynamics(state: &RobotState, action: NavAction, cfg: &NavConfig) -> RobotState {
    let target = action.clipped(cfg);
    let dv_max = cfg.max_lin_acc * cfg.dt_s;
    let dw_max = cfg.max_ang_acc * cfg.dt_s;

    let v = (state.linear_vel + (target.target_linear - state.linear_vel).clamp(-dv_max, dv_max))
        .clamp(cfg.min_linear_vel, cfg.max_linear_vel);
    let w = (state.angular_vel + (target.target_angular - state.angular_vel).clamp(-dw_max, dw_max))
        .clamp(-cfg.max_angular_vel, cfg.max_angular_vel);

    RobotState {
        x: state.x + v * state.heading.cos() * cfg.dt_s,
        y: state.y + v * state.heading.sin() * cfg.dt_s,
        heading: wrap_angle(state.heading + w * cfg.dt_s),
        linear_vel: v,
        angular_vel: w,
        ..*state
    }
}

/// Axis-aligned square footprint test: the four corners and the centre are
/// checked against occupied cells.
pub fn footprint_collides(map: &GridMap, x: f64, y: f64, cfg: &NavConfig) -> bool {
    let h = cfg.agent_width_m / 2.0;
    [(0.0, 0.0), (-h, -h), (h, -h), (-h, h), (h, h)].iter().any(|&(ox, oy)| map.is_occupied_at(x + ox, y + oy))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NavConfig {
        NavConfig::default()
    }

    #[test]
    fn rest_is_a_fixed_point() {
        let s = RobotState::at_rest(2.0, 3.0, 0.4);
        let n = step_dynamics(&s, NavAction::new(0.0, 0.0), &cfg());
        assert_eq!(n, s);
    }

    #[test]
    fn linear_acceleration_cap() {
        let s = RobotState::at_rest(2.0, 3.0, 0.0);
        let n = step_dynamics(&s, NavAction::new(1.0, 0.0), &cfg());
        assert!((n.linear_vel - 0.1).abs() < 1e-12);
        assert!((n.x - 2.01).abs() < 1e-12);
        assert_eq!(n.y, 3.0);
    }

    #[test]
    fn angular_acceleration_cap() {
        let s = RobotState { linear_vel: 1.0, ..RobotState::at_rest(2.0, 3.0, 0.0) };
        let n = step_dynamics(&s, NavAction::new(1.0, 0.6), &cfg());
        assert!((n.angular_vel - 0.1).abs() < 1e-12);
        assert_eq!(n.linear_vel, 1.0);
        assert!((n.heading - 0.01).abs() < 1e-12);
    }

    #[test]
    fn footprint_against_wall() {
        let map = GridMap::empty(11, 11, 1.0).unwrap();
        assert!(!footprint_collides(&map, 5.5, 5.5, &cfg()));
        assert!(!footprint_collides(&map, 1.26, 5.5, &cfg()));
        assert!(footprint_collides(&map, 1.24, 5.5, &cfg()));
        assert!(footprint_collides(&map, 9.76, 9.76, &cfg()));
    }
}
