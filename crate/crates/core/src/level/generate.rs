use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::Rng;

use super::{all_solvable, EnvKind, GenParams, GridLevel, LevelSpec};
use crate::grid::{Cell, GridMap};
use crate::gridmaze::{Direction, MazeLevel};
use crate::jaxnav::{wrap_angle, AgentTask, JaxNavLevel};
use crate::rng::SimRng;
use crate::{Error, Result};

/// Rejection sampling gives up after this many unsolvable draws.
pub const MAX_SOLVABLE_ATTEMPTS: usize = 100_000;

/// Probability that a single edit relocates a goal instead of toggling a cell.
const GOAL_MOVE_PROB: f64 = 0.1;

/// Draws one level. Solvability is not guaranteed.
pub fn generate_level(params: &GenParams, rng: &mut SimRng) -> Result<LevelSpec> {
    Ok(match params.env_kind {
        EnvKind::Jaxnav => LevelSpec::JaxNav(generate_jaxnav(params, rng)?),
        EnvKind::Gridmaze => LevelSpec::GridMaze(generate_maze(params, rng)?),
    })
}

/// Draws levels until every agent's goal is reachable.
pub fn generate_solvable(params: &GenParams, rng: &mut SimRng) -> Result<LevelSpec> {
    for _ in 0..MAX_SOLVABLE_ATTEMPTS {
        let level = generate_level(params, rng)?;
        if all_solvable(&level) {
            return Ok(level);
        }
    }
    Err(Error::Generation(format!("no solvable level in {MAX_SOLVABLE_ATTEMPTS} attempts")))
}

/// Interior fill drawn uniformly in `[0, max_fill_fraction)`, then starts and
/// goals at the centres of distinct free cells.
pub fn generate_jaxnav(params: &GenParams, rng: &mut SimRng) -> Result<JaxNavLevel> {
    params.validate()?;
    let mut map = GridMap::empty(params.map_w, params.map_h, params.cell_size_m)?;
    let fill = rng.random::<f64>() * params.max_fill_fraction;
    let n_walls = (fill * map.interior_count() as f64).floor() as usize;
    place_walls(&mut map, n_walls, rng)?;

    let cells = pick_free(&map, 2 * params.n_agents, rng)?;
    let tasks = cells
        .chunks(2)
        .map(|pair| {
            let (sx, sy) = map.cell_center(pair[0]);
            let (gx, gy) = map.cell_center(pair[1]);
            let heading = wrap_angle(rng.random_range(-PI..PI));
            AgentTask { start_x: sx, start_y: sy, start_heading: heading, goal_x: gx, goal_y: gy }
        })
        .collect();
    Ok(JaxNavLevel { map, tasks })
}

/// Exactly `wall_count` interior walls, then distinct start and goal cells.
pub fn generate_maze(params: &GenParams, rng: &mut SimRng) -> Result<MazeLevel> {
    params.validate()?;
    let mut grid = GridMap::empty(params.map_w, params.map_h, 1.0)?;
    place_walls(&mut grid, params.wall_count, rng)?;
    let cells = pick_free(&grid, 2, rng)?;
    let start_dir = Direction::from_index(rng.random_range(0..4));
    Ok(MazeLevel { grid, start: cells[0], start_dir, goal: cells[1] })
}

fn place_walls(map: &mut GridMap, n_walls: usize, rng: &mut SimRng) -> Result<()> {
    let interior: Vec<Cell> = map.interior_cells().collect();
    if n_walls > interior.len() {
        return Err(Error::Generation(format!("{n_walls} walls requested but only {} interior cells", interior.len())));
    }
    for i in sample(rng, interior.len(), n_walls) {
        map.set_wall(interior[i], true)?;
    }
    Ok(())
}

fn pick_free(map: &GridMap, n: usize, rng: &mut SimRng) -> Result<Vec<Cell>> {
    let free: Vec<Cell> = map.interior_cells().filter(|&c| !map.is_wall(c)).collect();
    if free.len() < n {
        return Err(Error::Generation(format!("need {n} free cells for starts and goals, found {}", free.len())));
    }
    Ok(sample(rng, free.len(), n).into_iter().map(|i| free[i]).collect())
}

/// Applies `n_edits` random edits. Each edit toggles one interior cell that
/// is not under a start or goal or, with probability 0.1, moves one goal to
/// another free cell. Edits with no valid target are skipped.
pub fn mutate_level<L: GridLevel>(level: &L, n_edits: usize, rng: &mut SimRng) -> L {
    let mut out = level.clone();
    for _ in 0..n_edits {
        let protected = out.protected_cells();
        if rng.random::<f64>() < GOAL_MOVE_PROB {
            let agent = rng.random_range(0..out.n_agents());
            let grid = out.grid();
            let targets: Vec<Cell> =
                grid.interior_cells().filter(|c| !grid.is_wall(*c) && !protected.contains(c)).collect();
            if !targets.is_empty() {
                let cell = targets[rng.random_range(0..targets.len())];
                out.set_goal_cell(agent, cell);
            }
        } else {
            let targets: Vec<Cell> = out.grid().interior_cells().filter(|c| !protected.contains(c)).collect();
            if !targets.is_empty() {
                let cell = targets[rng.random_range(0..targets.len())];
                out.grid_mut().toggle(cell).expect("interior cell");
            }
        }
    }
    out
}
