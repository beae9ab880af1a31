use std::f64::consts::PI;

use super::NavConfig;
use crate::grid::GridMap;
use crate::{Error, Result};

/// Range readings for `beam_count` beams spread evenly over 360°, beam `k`
/// pointing at `heading + 2πk / beam_count`.
///
/// Each beam advances in `lidar_resolution_m` steps and reports the first
/// step whose swept segment has entered an occupied cell, so a reading is a
/// multiple of the resolution clamped to `[0, lidar_max_m]`. Cell boundaries
/// are traversed exactly, which means thin corner clips are never skipped.
pub fn lidar_scan(map: &GridMap, x: f64, y: f64, heading: f64, cfg: &NavConfig) -> Result<Vec<f64>> {
    if !map.contains_point(x, y) || !heading.is_finite() {
        return Err(Error::InvalidPose { x, y, width_m: map.width_m(), height_m: map.height_m() });
    }
    let step = 2.0 * PI / cfg.beam_count as f64;
    Ok((0..cfg.beam_count)
        .map(|k| {
            let angle = heading + step * k as f64;
            let hit = first_hit_distance(map, x, y, angle.cos(), angle.sin(), cfg.lidar_max_m);
            quantize(hit, cfg.lidar_resolution_m, cfg.lidar_max_m)
        })
        .collect())
}

fn quantize(distance: f64, resolution: f64, max_range: f64) -> f64 {
    if distance >= max_range {
        return max_range;
    }
    let steps = (distance / resolution - 1e-9).ceil().max(0.0);
    (steps * resolution).min(max_range)
}

/// Distance along the ray to the boundary of the first occupied cell, or
/// `max_range` if none is reached. Grid traversal after Amanatides & Woo.
fn first_hit_distance(map: &GridMap, x: f64, y: f64, dx: f64, dy: f64, max_range: f64) -> f64 {
    let cs = map.cell_size();
    let (gx, gy) = (x / cs, y / cs);
    let mut cx = gx.floor() as i64;
    let mut cy = gy.floor() as i64;
    if map.is_wall_signed(cx, cy) {
        return 0.0;
    }
    let (step_x, mut t_max_x, t_delta_x) = axis_setup(gx, dx);
    let (step_y, mut t_max_y, t_delta_y) = axis_setup(gy, dy);
    let max_t = max_range / cs;
    loop {
        let t = if t_max_x < t_max_y {
            cx += step_x;
            let t = t_max_x;
            t_max_x += t_delta_x;
            t
        } else {
            cy += step_y;
            let t = t_max_y;
            t_max_y += t_delta_y;
            t
        };
        if t > max_t {
            return max_range;
        }
        if map.is_wall_signed(cx, cy) {
            return t * cs;
        }
    }
}

fn axis_setup(pos: f64, dir: f64) -> (i64, f64, f64) {
    if dir > 0.0 {
        (1, (pos.floor() + 1.0 - pos) / dir, 1.0 / dir)
    } else if dir < 0.0 {
        (-1, (pos - pos.floor()) / -dir, -1.0 / dir)
    } else {
        (0, f64::INFINITY, f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NavConfig {
        NavConfig::default()
    }

    #[test]
    fn beam_along_x_hits_inner_wall_face() {
        // 11 x 11 m map, border walls occupy [10, 11): face at x = 10.
        let map = GridMap::empty(11, 11, 1.0).unwrap();
        let scan = lidar_scan(&map, 5.5, 5.5, 0.0, &cfg()).unwrap();
        assert!((scan[0] - 4.5).abs() <= cfg().lidar_resolution_m, "{}", scan[0]);
        // beam k = 50 of 200 points along +y, k = 100 along -x
        assert!((scan[50] - 4.5).abs() <= 0.05);
        assert!((scan[100] - 4.5).abs() <= 0.05);
    }

    #[test]
    fn open_interior_reads_max_range() {
        let map = GridMap::empty(40, 40, 1.0).unwrap();
        let scan = lidar_scan(&map, 20.0, 20.0, 0.3, &cfg()).unwrap();
        assert_eq!(scan.len(), 200);
        assert!(scan.iter().all(|&r| r == 6.0));
    }

    #[test]
    fn close_wall_within_one_step() {
        let map = GridMap::empty(11, 11, 1.0).unwrap();
        // 0.2 m from the face at x = 10.
        let scan = lidar_scan(&map, 9.8, 5.5, 0.0, &cfg()).unwrap();
        assert!((0.15..=0.25).contains(&scan[0]), "{}", scan[0]);
    }

    #[test]
    fn pose_outside_map_is_rejected() {
        let map = GridMap::empty(11, 11, 1.0).unwrap();
        assert!(matches!(lidar_scan(&map, 12.0, 5.0, 0.0, &cfg()), Err(Error::InvalidPose { .. })));
        assert!(lidar_scan(&map, -0.1, 5.0, 0.0, &cfg()).is_err());
    }

    #[test]
    fn inside_wall_reads_zero() {
        let map = GridMap::empty(11, 11, 1.0).unwrap();
        let scan = lidar_scan(&map, 0.5, 5.5, 0.0, &cfg()).unwrap();
        assert!(scan.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn readings_are_resolution_multiples() {
        let map = GridMap::empty(11, 11, 1.0).unwrap();
        let scan = lidar_scan(&map, 3.3, 7.1, 1.0, &cfg()).unwrap();
        for r in scan {
            let k = r / 0.05;
            assert!((k - k.round()).abs() < 1e-6);
            assert!((0.0..=6.0).contains(&r));
        }
    }
}
