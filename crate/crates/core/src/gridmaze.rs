//! Partially observable single-agent grid maze.
//!
//! The agent turns left or right or moves one cell forward and sees a square
//! egocentric window in front of it. Reaching the goal pays
//! `1 - 0.9 * steps / max_steps`, so any success is worth more than 0.1 and a
//! timeout pays nothing.

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, GridMap};
use crate::{Error, Result};

/// Facing direction. `x` grows to the east, `y` to the south.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    East,
    South,
    West,
    North,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::East, Direction::South, Direction::West, Direction::North];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Self {
        Self::ALL[i % 4]
    }

    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::East => (1, 0),
            Direction::South => (0, 1),
            Direction::West => (-1, 0),
            Direction::North => (0, -1),
        }
    }

    pub fn left(self) -> Self {
        Self::from_index(self.index() + 3)
    }

    pub fn right(self) -> Self {
        Self::from_index(self.index() + 1)
    }

    pub fn letter(self) -> char {
        match self {
            Direction::East => 'E',
            Direction::South => 'S',
            Direction::West => 'W',
            Direction::North => 'N',
        }
    }

    pub fn from_letter(c: &str) -> Option<Self> {
        match c {
            "E" => Some(Direction::East),
            "S" => Some(Direction::South),
            "W" => Some(Direction::West),
            "N" => Some(Direction::North),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MazeLevel {
    pub grid: GridMap,
    pub start: Cell,
    pub start_dir: Direction,
    pub goal: Cell,
}

impl MazeLevel {
    pub fn validate(&self) -> Result<()> {
        for (what, c) in [("start", self.start), ("goal", self.goal)] {
            if !self.grid.is_interior(c) || self.grid.is_wall(c) {
                return Err(Error::Argument(format!("{what} cell ({}, {}) is not a free interior cell", c.0, c.1)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MazeConfig {
    pub view_size: usize,
    pub max_steps: u32,
}

impl Default for MazeConfig {
    fn default() -> Self {
        Self { view_size: 5, max_steps: 256 }
    }
}

impl MazeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.view_size == 0 || self.view_size.is_multiple_of(2) {
            return Err(Error::Argument(format!("view_size must be odd and positive, got {}", self.view_size)));
        }
        if self.max_steps == 0 {
            return Err(Error::Argument("max_steps must be positive".into()));
        }
        Ok(())
    }

    /// One-hot view cells followed by the one-hot direction.
    pub fn obs_dim(&self) -> usize {
        self.view_size * self.view_size * MazeCell::COUNT + 4
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MazeState {
    pub cell: Cell,
    pub dir: Direction,
    pub steps: u32,
    pub done: bool,
}

impl MazeState {
    pub fn initial(level: &MazeLevel) -> Self {
        Self { cell: level.start, dir: level.start_dir, steps: 0, done: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MazeAction {
    Left,
    Right,
    Forward,
}

impl MazeAction {
    pub const COUNT: usize = 3;

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(MazeAction::Left),
            1 => Ok(MazeAction::Right),
            2 => Ok(MazeAction::Forward),
            _ => Err(Error::Argument(format!("maze action index {i} out of range"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MazeEvent {
    None,
    GoalReached,
    Timeout,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MazeStepOutput {
    pub state: MazeState,
    pub reward: f64,
    pub done: bool,
    pub event: MazeEvent,
}

pub fn maze_step(level: &MazeLevel, state: &MazeState, action: MazeAction, cfg: &MazeConfig) -> Result<MazeStepOutput> {
    if state.done {
        return Err(Error::Contract("maze_step called on a finished episode".into()));
    }
    let mut next = *state;
    match action {
        MazeAction::Left => next.dir = state.dir.left(),
        MazeAction::Right => next.dir = state.dir.right(),
        MazeAction::Forward => {
            let (dx, dy) = state.dir.delta();
            let (nx, ny) = (state.cell.0 as i64 + dx, state.cell.1 as i64 + dy);
            if !level.grid.is_wall_signed(nx, ny) {
                next.cell = (nx as usize, ny as usize);
            }
        }
    }
    next.steps = state.steps + 1;

    let (event, reward) = if next.cell == level.goal {
        (MazeEvent::GoalReached, 1.0 - 0.9 * (state.steps as f64 / cfg.max_steps as f64))
    } else if next.steps >= cfg.max_steps {
        (MazeEvent::Timeout, 0.0)
    } else {
        (MazeEvent::None, 0.0)
    };
    next.done = event != MazeEvent::None;
    Ok(MazeStepOutput { state: next, reward, done: next.done, event })
}

/// Content of one view cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MazeCell {
    Free,
    Wall,
    Goal,
    OutOfBounds,
}

impl MazeCell {
    pub const COUNT: usize = 4;
}

#[derive(Clone, Debug, PartialEq)]
pub struct MazeObservation {
    pub view_size: usize,
    /// Row-major; row 0 is farthest ahead, the agent sits at the middle of
    /// the last row.
    pub cells: Vec<MazeCell>,
    pub direction: Direction,
}

impl MazeObservation {
    pub fn at(&self, row: usize, col: usize) -> MazeCell {
        self.cells[row * self.view_size + col]
    }

    pub fn write_flat(&self, out: &mut [f64]) {
        let n = self.cells.len() * MazeCell::COUNT;
        out[..n + 4].fill(0.0);
        for (i, c) in self.cells.iter().enumerate() {
            out[i * MazeCell::COUNT + *c as usize] = 1.0;
        }
        out[n + self.direction.index()] = 1.0;
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.cells.len() * MazeCell::COUNT + 4];
        self.write_flat(&mut v);
        v
    }
}

pub fn maze_observe(level: &MazeLevel, state: &MazeState, cfg: &MazeConfig) -> MazeObservation {
    let v = cfg.view_size;
    let half = (v / 2) as i64;
    let (fx, fy) = state.dir.delta();
    let (rx, ry) = state.dir.right().delta();
    let mut cells = Vec::with_capacity(v * v);
    for row in 0..v {
        let ahead = (v - 1 - row) as i64;
        for col in 0..v {
            let side = col as i64 - half;
            let x = state.cell.0 as i64 + ahead * fx + side * rx;
            let y = state.cell.1 as i64 + ahead * fy + side * ry;
            let in_bounds = x >= 0 && y >= 0 && (x as usize) < level.grid.width() && (y as usize) < level.grid.height();
            cells.push(if !in_bounds {
                MazeCell::OutOfBounds
            } else if level.grid.is_wall((x as usize, y as usize)) {
                MazeCell::Wall
            } else if (x as usize, y as usize) == level.goal {
                MazeCell::Goal
            } else {
                MazeCell::Free
            });
        }
    }
    MazeObservation { view_size: v, cells, direction: state.dir }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(w: usize, h: usize, start: Cell, dir: Direction, goal: Cell) -> MazeLevel {
        MazeLevel { grid: GridMap::empty(w, h, 1.0).unwrap(), start, start_dir: dir, goal }
    }

    /// Quarter turn clockwise on screen: (x, y) -> (h - 1 - y, x).
    fn rotate(level: &MazeLevel, state: &MazeState) -> (MazeLevel, MazeState) {
        let (w, h) = (level.grid.width(), level.grid.height());
        let rc = |(x, y): Cell| (h - 1 - y, x);
        let mut occ = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                let (nx, ny) = rc((x, y));
                occ[ny * h + nx] = level.grid.is_wall((x, y));
            }
        }
        let grid = GridMap::from_occupancy(h, w, 1.0, occ).unwrap();
        let lvl = MazeLevel { grid, start: rc(level.start), start_dir: level.start_dir.right(), goal: rc(level.goal) };
        let st = MazeState { cell: rc(state.cell), dir: state.dir.right(), ..*state };
        (lvl, st)
    }

    #[test]
    fn forward_into_wall_is_blocked() {
        let cfg = MazeConfig::default();
        let lvl = open(5, 5, (1, 1), Direction::North, (3, 3));
        let out = maze_step(&lvl, &MazeState::initial(&lvl), MazeAction::Forward, &cfg).unwrap();
        assert_eq!(out.state.cell, (1, 1));
        assert_eq!(out.reward, 0.0);
        assert!(!out.done);
    }

    #[test]
    fn four_left_turns_are_identity() {
        let cfg = MazeConfig::default();
        let lvl = open(5, 5, (2, 2), Direction::East, (3, 3));
        let mut s = MazeState::initial(&lvl);
        for _ in 0..4 {
            s = maze_step(&lvl, &s, MazeAction::Left, &cfg).unwrap().state;
        }
        assert_eq!(s.dir, Direction::East);
        assert_eq!(s.cell, (2, 2));
    }

    #[test]
    fn immediate_goal_pays_one() {
        let cfg = MazeConfig::default();
        let lvl = open(5, 5, (2, 2), Direction::East, (3, 2));
        let out = maze_step(&lvl, &MazeState::initial(&lvl), MazeAction::Forward, &cfg).unwrap();
        assert_eq!(out.event, MazeEvent::GoalReached);
        assert_eq!(out.reward, 1.0);
        assert!(out.done);
        assert!(matches!(maze_step(&lvl, &out.state, MazeAction::Left, &cfg), Err(Error::Contract(_))));
    }

    #[test]
    fn reward_decays_with_steps_and_timeout_pays_nothing() {
        let cfg = MazeConfig { max_steps: 3, ..MazeConfig::default() };
        let lvl = open(5, 5, (2, 2), Direction::East, (3, 2));
        let mut s = MazeState::initial(&lvl);
        for a in [MazeAction::Left, MazeAction::Right] {
            s = maze_step(&lvl, &s, a, &cfg).unwrap().state;
        }
        let out = maze_step(&lvl, &s, MazeAction::Forward, &cfg).unwrap();
        assert_eq!(out.event, MazeEvent::GoalReached);
        assert!((out.reward - (1.0 - 0.9 * 2.0 / 3.0)).abs() < 1e-12);

        let out = maze_step(&lvl, &s, MazeAction::Left, &cfg).unwrap();
        assert_eq!(out.event, MazeEvent::Timeout);
        assert_eq!(out.reward, 0.0);
        assert!(out.done);
    }

    #[test]
    fn wall_ahead_shows_in_view() {
        let cfg = MazeConfig::default();
        let lvl = open(5, 5, (1, 1), Direction::North, (3, 3));
        let obs = maze_observe(&lvl, &MazeState::initial(&lvl), &cfg);
        assert_eq!(obs.at(4, 2), MazeCell::Free);
        assert_eq!(obs.at(3, 2), MazeCell::Wall);
        // beyond the border row everything is out of bounds
        for col in 0..5 {
            for row in 0..3 {
                assert_eq!(obs.at(row, col), MazeCell::OutOfBounds);
            }
        }
        // facing north from (1, 1): left of the agent is x = 0 (wall), x = -1 is outside
        assert_eq!(obs.at(4, 1), MazeCell::Wall);
        assert_eq!(obs.at(4, 0), MazeCell::OutOfBounds);
    }

    #[test]
    fn single_goal_marker_in_view() {
        let cfg = MazeConfig::default();
        let lvl = open(9, 9, (4, 6), Direction::North, (5, 4));
        let obs = maze_observe(&lvl, &MazeState::initial(&lvl), &cfg);
        let goals = obs.cells.iter().filter(|&&c| c == MazeCell::Goal).count();
        assert_eq!(goals, 1);
        assert_eq!(obs.at(2, 3), MazeCell::Goal);
        let flat = obs.to_vec();
        assert_eq!(flat.len(), cfg.obs_dim());
        assert_eq!(flat.iter().sum::<f64>(), 26.0);
    }

    #[test]
    fn observation_rotation_invariant() {
        let cfg = MazeConfig::default();
        let mut grid = GridMap::empty(8, 6, 1.0).unwrap();
        for c in [(2, 2), (3, 1), (5, 3), (4, 4)] {
            grid.set_wall(c, true).unwrap();
        }
        let lvl = MazeLevel { grid, start: (2, 3), start_dir: Direction::East, goal: (5, 2) };
        for dir in Direction::ALL {
            let s = MazeState { dir, ..MazeState::initial(&lvl) };
            let obs = maze_observe(&lvl, &s, &cfg);
            let (rl, rs) = rotate(&lvl, &s);
            let robs = maze_observe(&rl, &rs, &cfg);
            assert_eq!(obs.cells, robs.cells);
        }
    }
}
