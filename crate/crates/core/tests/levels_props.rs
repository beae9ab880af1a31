use proptest::prelude::*;
use sfl_core::grid::GridMap;
use sfl_core::gridmaze::{Direction, MazeLevel};
use sfl_core::level::{
    generate_level, is_solvable, mutate_level, parse_level, parse_levels, serialize_level, GenParams, GridLevel,
    LevelSpec,
};
use sfl_core::rng::stream;

/// Independent oracle: iterative depth-first flood fill over free cells.
fn flood_reaches(occ: &[bool], w: usize, start: (usize, usize), goal: (usize, usize)) -> bool {
    let mut seen = vec![false; occ.len()];
    let mut stack = vec![start];
    seen[start.1 * w + start.0] = true;
    while let Some((x, y)) = stack.pop() {
        if (x, y) == goal {
            return true;
        }
        let cand = [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)];
        for (nx, ny) in cand {
            let i = ny * w + nx;
            if !occ[i] && !seen[i] {
                seen[i] = true;
                stack.push((nx, ny));
            }
        }
    }
    false
}

fn random_maze(w: usize, h: usize, walls: &[bool], s: usize, g: usize) -> Option<MazeLevel> {
    let mut occ = vec![true; w * h];
    let interior: Vec<(usize, usize)> = (1..h - 1).flat_map(|y| (1..w - 1).map(move |x| (x, y))).collect();
    for (i, &(x, y)) in interior.iter().enumerate() {
        occ[y * w + x] = walls[i % walls.len()];
    }
    let start = interior[s % interior.len()];
    let goal = interior[g % interior.len()];
    if start == goal {
        return None;
    }
    occ[start.1 * w + start.0] = false;
    occ[goal.1 * w + goal.0] = false;
    let grid = GridMap::from_occupancy(w, h, 1.0, occ).ok()?;
    Some(MazeLevel { grid, start, start_dir: Direction::North, goal })
}

proptest! {
    #[test]
    fn solvability_matches_flood_fill(
        w in 3usize..10, h in 3usize..10,
        walls in prop::collection::vec(prop::bool::weighted(0.4), 1..64),
        s in any::<usize>(), g in any::<usize>(),
    ) {
        if let Some(level) = random_maze(w, h, &walls, s, g) {
            let oracle = flood_reaches(level.grid.occupancy(), w, level.start, level.goal);
            prop_assert_eq!(is_solvable(&level, 0), oracle);
        }
    }

    #[test]
    fn generated_levels_roundtrip_through_text(seed in any::<u64>(), maze in any::<bool>(), agents in 1usize..4) {
        let params = if maze {
            GenParams::gridmaze(9, 20)
        } else {
            GenParams { n_agents: agents, ..GenParams::default() }
        };
        let level = generate_level(&params, &mut stream(seed, &[])).unwrap();
        let text = serialize_level(&level);
        prop_assert_eq!(parse_level(&text).unwrap(), level);
    }

    #[test]
    fn mutation_keeps_border_and_tasks(seed in any::<u64>(), edits in 0usize..30) {
        let level = generate_level(&GenParams::default(), &mut stream(seed, &[1])).unwrap();
        let child = mutate_level(&level, edits, &mut stream(seed, &[2]));
        let (g0, g1) = (level.grid(), child.grid());
        prop_assert_eq!((g0.width(), g0.height()), (g1.width(), g1.height()));
        for x in 0..g1.width() {
            prop_assert!(g1.is_wall((x, 0)) && g1.is_wall((x, g1.height() - 1)));
        }
        for y in 0..g1.height() {
            prop_assert!(g1.is_wall((0, y)) && g1.is_wall((g1.width() - 1, y)));
        }
        for a in 0..child.n_agents() {
            prop_assert!(!g1.is_wall(child.start_cell(a)));
            prop_assert!(!g1.is_wall(child.goal_cell(a)));
        }
        let changed = g0.occupancy().iter().zip(g1.occupancy()).filter(|(a, b)| a != b).count();
        prop_assert!(changed <= edits);
    }
}

#[test]
fn level_file_with_several_levels() {
    let params = GenParams::gridmaze(7, 6);
    let mut rng = stream(3, &[]);
    let levels: Vec<LevelSpec> = (0..3).map(|_| generate_level(&params, &mut rng).unwrap()).collect();
    let text = levels.iter().map(serialize_level).collect::<Vec<_>>().join("\n");
    assert_eq!(parse_levels(&text).unwrap(), levels);
}
