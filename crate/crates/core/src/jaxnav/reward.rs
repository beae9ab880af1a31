use super::{NavConfig, RobotState, ShapingSign, StepEvent};

/// Individual (pre-mixing) reward for one robot transition.
///
/// The goal term pays `goal_reward` when the goal is reached and otherwise a
/// distance-change shaping term; the collision term pays `collision_reward`
/// on collision, `close_reward` when the closest LiDAR reading is within
/// `close_distance_m`, and nothing otherwise. A constant time penalty is
/// always added.
pub fn compute_reward(
    prev: &RobotState,
    next: &RobotState,
    event: StepEvent,
    min_lidar_m: f64,
    goal: (f64, f64),
    cfg: &NavConfig,
) -> f64 {
    let goal_term = if event == StepEvent::GoalReached {
        cfg.goal_reward
    } else {
        let d_prev = (prev.x - goal.0).hypot(prev.y - goal.1);
        let d_next = (next.x - goal.0).hypot(next.y - goal.1);
        let change = match cfg.shaping_sign {
            ShapingSign::TowardGoalPositive => d_prev - d_next,
            ShapingSign::AwayFromGoalPositive => d_next - d_prev,
        };
        cfg.goal_distance_weight * change
    };
    let collision_term = if event == StepEvent::Collision {
        cfg.collision_reward
    } else if min_lidar_m <= cfg.close_distance_m {
        cfg.close_reward
    } else {
        0.0
    };
    goal_term + collision_term + cfg.time_reward
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(x: f64, y: f64) -> RobotState {
        RobotState::at_rest(x, y, 0.0)
    }

    #[test]
    fn goal_reached() {
        let cfg = NavConfig::default();
        let r = compute_reward(&at(5.0, 5.0), &at(5.1, 5.0), StepEvent::GoalReached, 1.0, (5.2, 5.0), &cfg);
        assert!((r - 3.99).abs() < 1e-12);
    }

    #[test]
    fn collision() {
        let cfg = NavConfig::default();
        let r = compute_reward(&at(5.0, 5.0), &at(5.0, 5.0), StepEvent::Collision, 0.0, (8.0, 5.0), &cfg);
        assert!((r + 4.01).abs() < 1e-12);
    }

    #[test]
    fn shaping_towards_goal() {
        let cfg = NavConfig::default();
        let r = compute_reward(&at(5.0, 5.0), &at(5.1, 5.0), StepEvent::None, 1.0, (8.0, 5.0), &cfg);
        assert!((r - 0.015).abs() < 1e-12);

        let literal = NavConfig { shaping_sign: ShapingSign::AwayFromGoalPositive, ..cfg };
        let r = compute_reward(&at(5.0, 5.0), &at(5.1, 5.0), StepEvent::None, 1.0, (8.0, 5.0), &literal);
        assert!((r + 0.035).abs() < 1e-12);
    }

    #[test]
    fn close_to_obstacle_penalty() {
        let cfg = NavConfig::default();
        let r = compute_reward(&at(5.0, 5.0), &at(5.0, 5.0), StepEvent::None, 0.4, (8.0, 5.0), &cfg);
        assert!((r + 0.11).abs() < 1e-12);
    }
}
