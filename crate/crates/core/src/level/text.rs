//! Plain-text level files.
//!
//! ```text
//! jaxnav 5 4 1
//! #####
//! #...#
//! #.#.#
//! #####
//! A 1.5 1.5 0
//! G 3.5 2.5
//! ```
//!
//! The header names the environment, the width and height in cells and the
//! agent count; navigation levels may add a fifth token with the cell size in
//! metres. Row `i` below the header is `y = i`. Each agent then gets an `A`
//! line (start position and heading in radians, or a cell and one of
//! `N E S W` for the maze) followed by a `G` line with its goal. Several
//! levels may share a file when separated by blank lines.

use super::{EnvKind, LevelSpec};
use crate::grid::GridMap;
use crate::gridmaze::{Direction, MazeLevel};
use crate::jaxnav::{AgentTask, JaxNavLevel, NavConfig};
use crate::{Error, Result};

pub fn serialize_level(level: &LevelSpec) -> String {
    let grid = match level {
        LevelSpec::JaxNav(l) => &l.map,
        LevelSpec::GridMaze(l) => &l.grid,
    };
    let mut out = format!("{} {} {}", level.kind().name(), grid.width(), grid.height());
    match level {
        LevelSpec::JaxNav(l) => {
            out += &format!(" {}", l.tasks.len());
            if l.map.cell_size() != 1.0 {
                out += &format!(" {}", l.map.cell_size());
            }
        }
        LevelSpec::GridMaze(_) => out += " 1",
    }
    out.push('\n');
    for row in grid.rows() {
        out += &row;
        out.push('\n');
    }
    match level {
        LevelSpec::JaxNav(l) => {
            for t in &l.tasks {
                out += &format!("A {} {} {}\nG {} {}\n", t.start_x, t.start_y, t.start_heading, t.goal_x, t.goal_y);
            }
        }
        LevelSpec::GridMaze(l) => {
            out += &format!("A {} {} {}\nG {} {}\n", l.start.0, l.start.1, l.start_dir.letter(), l.goal.0, l.goal.1);
        }
    }
    out
}

pub fn parse_level(text: &str) -> Result<LevelSpec> {
    let lines: Vec<(usize, &str)> =
        text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end())).filter(|(_, l)| !l.trim().is_empty()).collect();
    parse_block(&lines)
}

/// Parses every blank-line separated level in `text`.
pub fn parse_levels(text: &str) -> Result<Vec<LevelSpec>> {
    let mut levels = Vec::new();
    let mut block: Vec<(usize, &str)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            if !block.is_empty() {
                levels.push(parse_block(&block)?);
                block.clear();
            }
        } else {
            block.push((i + 1, line.trim_end()));
        }
    }
    if !block.is_empty() {
        levels.push(parse_block(&block)?);
    }
    Ok(levels)
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_block(lines: &[(usize, &str)]) -> Result<LevelSpec> {
    let Some(&(hline, header)) = lines.first() else {
        return Err(err(1, "empty level"));
    };
    let tok: Vec<&str> = header.split_whitespace().collect();
    let kind = match tok.first().copied() {
        Some("jaxnav") => EnvKind::Jaxnav,
        Some("gridmaze") => EnvKind::Gridmaze,
        other => return Err(err(hline, format!("unknown environment {other:?} in header"))),
    };
    let max_tokens = if kind == EnvKind::Jaxnav { 5 } else { 4 };
    if tok.len() < 4 || tok.len() > max_tokens {
        return Err(err(hline, "header must be `<env> <width> <height> <agents>`"));
    }
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>().map_err(|_| err(hline, format!("bad {what} `{s}`")))
    };
    let (w, h, n) = (num(tok[1], "width")?, num(tok[2], "height")?, num(tok[3], "agent count")?);
    if w < 3 || h < 3 {
        return Err(err(hline, "maps need at least 3 x 3 cells"));
    }
    if n == 0 || (kind == EnvKind::Gridmaze && n != 1) {
        return Err(err(hline, format!("invalid agent count {n}")));
    }
    let cell_size = match tok.get(4) {
        Some(s) => s
            .parse::<f64>()
            .ok()
            .filter(|c| *c > 0.0 && c.is_finite())
            .ok_or_else(|| err(hline, format!("bad cell size `{s}`")))?,
        None => 1.0,
    };

    if lines.len() < 1 + h + 2 * n {
        let last = lines.last().map_or(hline, |l| l.0);
        return Err(err(last + 1, "level ends early"));
    }
    let mut occupancy = Vec::with_capacity(w * h);
    for (y, &(ln, row)) in lines[1..=h].iter().enumerate() {
        if row.chars().count() != w {
            return Err(err(ln, format!("row has {} cells, expected {w}", row.chars().count())));
        }
        for (x, ch) in row.chars().enumerate() {
            let wall = match ch {
                '#' => true,
                '.' => false,
                other => return Err(err(ln, format!("unknown cell character `{other}`"))),
            };
            let border = x == 0 || y == 0 || x == w - 1 || y == h - 1;
            if border && !wall {
                return Err(err(ln, format!("border cell ({x}, {y}) must be a wall")));
            }
            occupancy.push(wall);
        }
    }
    let grid = GridMap::from_occupancy(w, h, cell_size, occupancy).map_err(|e| err(lines[1].0, e.to_string()))?;

    let agent_lines = &lines[1 + h..];
    if agent_lines.len() != 2 * n {
        return Err(err(agent_lines[2 * n].0, "unexpected trailing line"));
    }
    let fields = |(ln, line): (usize, &str), tag: &str, count: usize| -> Result<Vec<String>> {
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.first() != Some(&tag) || t.len() != count + 1 {
            return Err(err(ln, format!("expected `{tag}` line with {count} values")));
        }
        Ok(t[1..].iter().map(|s| s.to_string()).collect())
    };
    let float = |ln: usize, s: &str| -> Result<f64> {
        s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(ln, format!("bad number `{s}`")))
    };
    let int = |ln: usize, s: &str| -> Result<usize> {
        s.parse::<usize>().map_err(|_| err(ln, format!("bad cell coordinate `{s}`")))
    };
    let free_cell = |ln: usize, what: &str, c: Option<(usize, usize)>| -> Result<()> {
        match c {
            Some(c) if grid.is_interior(c) && !grid.is_wall(c) => Ok(()),
            _ => Err(err(ln, format!("{what} is not on a free interior cell"))),
        }
    };

    match kind {
        EnvKind::Jaxnav => {
            let mut tasks = Vec::with_capacity(n);
            for pair in agent_lines.chunks(2) {
                let (aln, gln) = (pair[0].0, pair[1].0);
                let a = fields(pair[0], "A", 3)?;
                let g = fields(pair[1], "G", 2)?;
                let task = AgentTask {
                    start_x: float(aln, &a[0])?,
                    start_y: float(aln, &a[1])?,
                    start_heading: float(aln, &a[2])?,
                    goal_x: float(gln, &g[0])?,
                    goal_y: float(gln, &g[1])?,
                };
                free_cell(aln, "start", grid.cell_of(task.start_x, task.start_y))?;
                free_cell(gln, "goal", grid.cell_of(task.goal_x, task.goal_y))?;
                tasks.push(task);
            }
            let level = JaxNavLevel { map: grid, tasks };
            level.validate(&NavConfig::default()).map_err(|e| err(agent_lines[0].0, e.to_string()))?;
            Ok(LevelSpec::JaxNav(level))
        }
        EnvKind::Gridmaze => {
            let (aln, gln) = (agent_lines[0].0, agent_lines[1].0);
            let a = fields(agent_lines[0], "A", 3)?;
            let g = fields(agent_lines[1], "G", 2)?;
            let start = (int(aln, &a[0])?, int(aln, &a[1])?);
            let start_dir =
                Direction::from_letter(&a[2]).ok_or_else(|| err(aln, format!("bad direction `{}`", a[2])))?;
            let goal = (int(gln, &g[0])?, int(gln, &g[1])?);
            let in_grid = |c: (usize, usize)| (c.0 < w && c.1 < h).then_some(c);
            free_cell(aln, "start", in_grid(start))?;
            free_cell(gln, "goal", in_grid(goal))?;
            Ok(LevelSpec::GridMaze(MazeLevel { grid, start, start_dir, goal }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::level::{generate_level, GenParams};
    use crate::rng::stream;

    #[test]
    fn roundtrip_generated_levels() {
        for (seed, params) in [
            GenParams { n_agents: 3, ..GenParams::default() },
            GenParams { cell_size_m: 0.5, map_w: 15, ..GenParams::default() },
            GenParams::gridmaze(9, 20),
        ]
        .iter()
        .enumerate()
        {
            let mut rng = stream(seed as u64, &[]);
            for _ in 0..30 {
                let lvl = generate_level(params, &mut rng).unwrap();
                let text = serialize_level(&lvl);
                assert_eq!(parse_level(&text).unwrap(), lvl, "{text}");
            }
        }
    }

    #[test]
    fn small_hand_written_level() {
        let text = "gridmaze 3 3 1\n###\n#.#\n###\nA 1 1 N\nG 1 1\n";
        let LevelSpec::GridMaze(lvl) = parse_level(text).unwrap() else { panic!() };
        let expected: Vec<bool> = [1, 1, 1, 1, 0, 1, 1, 1, 1].iter().map(|&b| b == 1).collect();
        assert_eq!(lvl.grid.occupancy(), &expected[..]);
        assert_eq!(lvl.start_dir, Direction::North);
    }

    #[test]
    fn unknown_character_names_line() {
        let text = "jaxnav 4 4 1\n####\n#.x#\n#..#\n####\nA 1.5 1.5 0\nG 2.5 2.5\n";
        match parse_level(text) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains('x'));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn goal_on_wall_rejected() {
        let text = "jaxnav 4 4 1\n####\n#.##\n#..#\n####\nA 1.5 1.5 0\nG 2.5 1.5\n";
        assert!(matches!(parse_level(text), Err(Error::Parse { line: 7, .. })));
    }

    #[test]
    fn open_border_rejected() {
        let text = "gridmaze 3 3 1\n#.#\n#.#\n###\nA 1 1 N\nG 1 1\n";
        assert!(matches!(parse_level(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn bad_header() {
        assert!(matches!(parse_level("maze 3 3 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_level("gridmaze 3 x 1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn multiple_levels_per_file() {
        let a = "gridmaze 3 3 1\n###\n#.#\n###\nA 1 1 N\nG 1 1\n";
        let b = "jaxnav 4 4 1\n####\n#..#\n#..#\n####\nA 1.5 1.5 0\nG 2.5 2.5\n";
        let levels = parse_levels(&format!("{a}\n{b}\n\n{a}")).unwrap();
        assert_eq!(levels.len(), 3);
        assert_eq!(levels[1].kind(), EnvKind::Jaxnav);
        let bad = format!("{a}\njaxnav 4 4 1\n####\n#..#\n#.?#\n####\nA 1.5 1.5 0\nG 2.5 2.5\n");
        assert!(matches!(parse_levels(&bad), Err(Error::Parse { line: 11, .. })));
    }
}
