//! Occupancy grids shared by both simulators.

use std::collections::VecDeque;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Integer cell coordinate `(x, y)`; `y` grows with the row index.
pub type Cell = (usize, usize);

/// Rectangular occupancy grid whose border cells are always walls.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridMap {
    width: usize,
    height: usize,
    cell_size: f64,
    occupancy: Vec<bool>,
}

impl PartialEq for GridMap {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.cell_size.to_bits() == other.cell_size.to_bits()
            && self.occupancy == other.occupancy
    }
}

impl Eq for GridMap {}

impl Hash for GridMap {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.width.hash(state);
        self.height.hash(state);
        self.cell_size.to_bits().hash(state);
        self.occupancy.hash(state);
    }
}

impl GridMap {
    /// Map with walls on the border and a free interior.
    pub fn empty(width: usize, height: usize, cell_size: f64) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(Error::Argument(format!("grid must be at least 3 x 3 cells, got {width} x {height}")));
        }
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(Error::Argument(format!("cell size must be positive, got {cell_size}")));
        }
        let mut occupancy = vec![false; width * height];
        for y in 0..height {
            for x in 0..width {
                if x == 0 || y == 0 || x == width - 1 || y == height - 1 {
                    occupancy[y * width + x] = true;
                }
            }
        }
        Ok(Self { width, height, cell_size, occupancy })
    }

    /// Builds a map from row-major occupancy, rejecting open borders.
    pub fn from_occupancy(width: usize, height: usize, cell_size: f64, occupancy: Vec<bool>) -> Result<Self> {
        let mut map = Self::empty(width, height, cell_size)?;
        if occupancy.len() != width * height {
            return Err(Error::Arity { what: "occupancy cells", expected: width * height, got: occupancy.len() });
        }
        map.occupancy = occupancy;
        if let Some((x, y)) = map.border_cells().find(|&c| !map.is_wall(c)) {
            return Err(Error::Argument(format!("border cell ({x}, {y}) is not a wall")));
        }
        Ok(map)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn width_m(&self) -> f64 {
        self.width as f64 * self.cell_size
    }

    pub fn height_m(&self) -> f64 {
        self.height as f64 * self.cell_size
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupancy
    }

    pub fn is_wall(&self, (x, y): Cell) -> bool {
        self.occupancy[y * self.width + x]
    }

    /// Signed lookup; anything outside the grid counts as a wall.
    pub fn is_wall_signed(&self, x: i64, y: i64) -> bool {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return true;
        }
        self.occupancy[y as usize * self.width + x as usize]
    }

    /// Interior cells only; border cells stay walls.
    pub fn set_wall(&mut self, cell: Cell, wall: bool) -> Result<()> {
        if !self.is_interior(cell) {
            return Err(Error::Argument(format!("cell {cell:?} is not an interior cell")));
        }
        self.occupancy[cell.1 * self.width + cell.0] = wall;
        Ok(())
    }

    pub fn toggle(&mut self, cell: Cell) -> Result<()> {
        let wall = self.is_wall(cell);
        self.set_wall(cell, !wall)
    }

    pub fn is_interior(&self, (x, y): Cell) -> bool {
        x >= 1 && y >= 1 && x + 1 < self.width && y + 1 < self.height
    }

    pub fn interior_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (1..self.height - 1).flat_map(move |y| (1..self.width - 1).map(move |x| (x, y)))
    }

    pub fn interior_count(&self) -> usize {
        (self.width - 2) * (self.height - 2)
    }

    pub fn free_cells(&self) -> Vec<Cell> {
        self.interior_cells().filter(|&c| !self.is_wall(c)).collect()
    }

    pub fn wall_count_interior(&self) -> usize {
        self.interior_cells().filter(|&c| self.is_wall(c)).count()
    }

    fn border_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height).flat_map(move |y| {
            (0..self.width).filter_map(move |x| {
                (x == 0 || y == 0 || x == self.width - 1 || y == self.height - 1).then_some((x, y))
            })
        })
    }

    /// Whether the metric point `(x, y)` lies inside the map rectangle.
    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= 0.0 && y >= 0.0 && x < self.width_m() && y < self.height_m()
    }

    /// Occupancy at a metric point; points outside the map are walls.
    pub fn is_occupied_at(&self, x: f64, y: f64) -> bool {
        let cx = (x / self.cell_size).floor();
        let cy = (y / self.cell_size).floor();
        if !(cx.is_finite() && cy.is_finite()) {
            return true;
        }
        self.is_wall_signed(cx as i64, cy as i64)
    }

    /// Cell containing a metric point inside the map.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<Cell> {
        if !self.contains_point(x, y) {
            return None;
        }
        let cx = ((x / self.cell_size).floor() as usize).min(self.width - 1);
        let cy = ((y / self.cell_size).floor() as usize).min(self.height - 1);
        Some((cx, cy))
    }

    /// Centre of a cell in metres.
    pub fn cell_center(&self, (x, y): Cell) -> (f64, f64) {
        ((x as f64 + 0.5) * self.cell_size, (y as f64 + 0.5) * self.cell_size)
    }

    /// Breadth-first distance over free cells with 4-connectivity.
    pub fn bfs_distance(&self, start: Cell, goal: Cell) -> Option<usize> {
        if self.is_wall(start) || self.is_wall(goal) {
            return None;
        }
        if start == goal {
            return Some(0);
        }
        let mut dist = vec![usize::MAX; self.width * self.height];
        let mut queue = VecDeque::new();
        dist[start.1 * self.width + start.0] = 0;
        queue.push_back(start);
        while let Some((x, y)) = queue.pop_front() {
            let d = dist[y * self.width + x];
            for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let nx = x as i64 + dx;
                let ny = y as i64 + dy;
                if self.is_wall_signed(nx, ny) {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                let slot = &mut dist[ny * self.width + nx];
                if *slot != usize::MAX {
                    continue;
                }
                *slot = d + 1;
                if (nx, ny) == goal {
                    return Some(d + 1);
                }
                queue.push_back((nx, ny));
            }
        }
        None
    }

    /// ASCII rows, `#` for walls and `.` for free cells.
    pub fn rows(&self) -> Vec<String> {
        (0..self.height)
            .map(|y| (0..self.width).map(|x| if self.is_wall((x, y)) { '#' } else { '.' }).collect())
            .collect()
    }
}
