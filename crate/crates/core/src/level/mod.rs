//! Level generation, solvability, mutation and the plain-text level format.

mod generate;
mod text;

use serde::{Deserialize, Serialize};

use crate::grid::{Cell, GridMap};
use crate::gridmaze::MazeLevel;
use crate::jaxnav::JaxNavLevel;
use crate::{Error, Result};

pub use generate::{
    generate_jaxnav, generate_level, generate_maze, generate_solvable, mutate_level, MAX_SOLVABLE_ATTEMPTS,
};
pub use text::{parse_level, parse_levels, serialize_level};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Jaxnav,
    Gridmaze,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Jaxnav => "jaxnav",
            EnvKind::Gridmaze => "gridmaze",
        }
    }
}

/// Either kind of level, as read from or written to a level file.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum LevelSpec {
    JaxNav(JaxNavLevel),
    GridMaze(MazeLevel),
}

impl LevelSpec {
    pub fn kind(&self) -> EnvKind {
        match self {
            LevelSpec::JaxNav(_) => EnvKind::Jaxnav,
            LevelSpec::GridMaze(_) => EnvKind::Gridmaze,
        }
    }
}

/// Random level distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub env_kind: EnvKind,
    pub map_w: usize,
    pub map_h: usize,
    pub cell_size_m: f64,
    /// Upper bound of the uniformly drawn interior fill fraction (navigation).
    pub max_fill_fraction: f64,
    /// Exact number of interior walls (maze).
    pub wall_count: usize,
    pub n_agents: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            env_kind: EnvKind::Jaxnav,
            map_w: 11,
            map_h: 11,
            cell_size_m: 1.0,
            max_fill_fraction: 0.6,
            wall_count: 60,
            n_agents: 1,
        }
    }
}

impl GenParams {
    pub fn gridmaze(size: usize, wall_count: usize) -> Self {
        Self { env_kind: EnvKind::Gridmaze, map_w: size, map_h: size, wall_count, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.max_fill_fraction) {
            return Err(Error::Argument(format!(
                "max_fill_fraction must lie in [0, 1), got {}",
                self.max_fill_fraction
            )));
        }
        if self.n_agents == 0 {
            return Err(Error::Argument("n_agents must be at least 1".into()));
        }
        if self.env_kind == EnvKind::Gridmaze && self.n_agents != 1 {
            return Err(Error::Argument("the maze is single-agent".into()));
        }
        if self.map_w < 3 || self.map_h < 3 {
            return Err(Error::Argument("maps need at least 3 x 3 cells".into()));
        }
        if !(self.cell_size_m > 0.0 && self.cell_size_m.is_finite()) {
            return Err(Error::Argument("cell_size_m must be positive".into()));
        }
        Ok(())
    }
}

/// Grid view of a level shared by both environments.
pub trait GridLevel: Clone {
    fn grid(&self) -> &GridMap;
    fn grid_mut(&mut self) -> &mut GridMap;
    fn n_agents(&self) -> usize;
    fn start_cell(&self, agent: usize) -> Cell;
    fn goal_cell(&self, agent: usize) -> Cell;
    /// Moves an agent's goal to the centre of `cell`.
    fn set_goal_cell(&mut self, agent: usize, cell: Cell);

    /// Cells under any start or goal.
    fn protected_cells(&self) -> Vec<Cell> {
        (0..self.n_agents()).flat_map(|i| [self.start_cell(i), self.goal_cell(i)]).collect()
    }
}

impl GridLevel for JaxNavLevel {
    fn grid(&self) -> &GridMap {
        &self.map
    }

    fn grid_mut(&mut self) -> &mut GridMap {
        &mut self.map
    }

    fn n_agents(&self) -> usize {
        self.tasks.len()
    }

    fn start_cell(&self, agent: usize) -> Cell {
        JaxNavLevel::start_cell(self, agent).expect("start inside map")
    }

    fn goal_cell(&self, agent: usize) -> Cell {
        JaxNavLevel::goal_cell(self, agent).expect("goal inside map")
    }

    fn set_goal_cell(&mut self, agent: usize, cell: Cell) {
        let (x, y) = self.map.cell_center(cell);
        self.tasks[agent].goal_x = x;
        self.tasks[agent].goal_y = y;
    }
}

impl GridLevel for MazeLevel {
    fn grid(&self) -> &GridMap {
        &self.grid
    }

    fn grid_mut(&mut self) -> &mut GridMap {
        &mut self.grid
    }

    fn n_agents(&self) -> usize {
        1
    }

    fn start_cell(&self, _agent: usize) -> Cell {
        self.start
    }

    fn goal_cell(&self, _agent: usize) -> Cell {
        self.goal
    }

    fn set_goal_cell(&mut self, _agent: usize, cell: Cell) {
        self.goal = cell;
    }
}

impl GridLevel for LevelSpec {
    fn grid(&self) -> &GridMap {
        match self {
            LevelSpec::JaxNav(l) => l.grid(),
            LevelSpec::GridMaze(l) => l.grid(),
        }
    }

    fn grid_mut(&mut self) -> &mut GridMap {
        match self {
            LevelSpec::JaxNav(l) => l.grid_mut(),
            LevelSpec::GridMaze(l) => l.grid_mut(),
        }
    }

    fn n_agents(&self) -> usize {
        match self {
            LevelSpec::JaxNav(l) => l.n_agents(),
            LevelSpec::GridMaze(l) => l.n_agents(),
        }
    }

    fn start_cell(&self, agent: usize) -> Cell {
        match self {
            LevelSpec::JaxNav(l) => GridLevel::start_cell(l, agent),
            LevelSpec::GridMaze(l) => GridLevel::start_cell(l, agent),
        }
    }

    fn goal_cell(&self, agent: usize) -> Cell {
        match self {
            LevelSpec::JaxNav(l) => GridLevel::goal_cell(l, agent),
            LevelSpec::GridMaze(l) => GridLevel::goal_cell(l, agent),
        }
    }

    fn set_goal_cell(&mut self, agent: usize, cell: Cell) {
        match self {
            LevelSpec::JaxNav(l) => l.set_goal_cell(agent, cell),
            LevelSpec::GridMaze(l) => l.set_goal_cell(agent, cell),
        }
    }
}

/// Whether the agent's goal cell is 4-connected to its start cell through
/// free cells. For the navigation world this treats the 0.5 m robot as a
/// point moving between 1 m cells.
pub fn is_solvable<L: GridLevel>(level: &L, agent: usize) -> bool {
    shortest_path_cells(level, agent).is_some()
}

/// Every agent's task is solvable.
pub fn all_solvable<L: GridLevel>(level: &L) -> bool {
    (0..level.n_agents()).all(|i| is_solvable(level, i))
}

/// BFS distance in cells from start to goal.
pub fn shortest_path_cells<L: GridLevel>(level: &L, agent: usize) -> Option<usize> {
    level.grid().bfs_distance(level.start_cell(agent), level.goal_cell(agent))
}
