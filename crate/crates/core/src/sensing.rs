//! Perfect range sensing into an agent's self maps.

use serde::{Deserialize, Serialize};

use crate::agent::AgentState;
use crate::geom::Vec2;
use crate::grid::BinaryGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensingMode {
    /// Every cell in the disk is observed, regardless of what lies between.
    #[default]
    Disk,
    /// Cells hidden behind an obstacle along the straight line are skipped.
    Occluded,
}

/// Marks every cell within `radius` of the agent as explored and copies the
/// ground truth into the self obstacle map. Never clears a cell.
pub fn sense(agent: &mut AgentState, ground: &BinaryGrid, radius: f64, mode: SensingMode) {
    let p = agent.position;
    let r2 = radius * radius;
    let x0 = (p.x - radius).floor().max(0.0) as usize;
    let y0 = (p.y - radius).floor().max(0.0) as usize;
    let x1 = ((p.x + radius).ceil() as usize).min(ground.width() - 1);
    let y1 = ((p.y + radius).ceil() as usize).min(ground.height() - 1);
    let origin = agent.cell();
    for y in y0..=y1 {
        for x in x0..=x1 {
            let d = Vec2::new(x as f64, y as f64) - p;
            if d.norm_sq() > r2 {
                continue;
            }
            if mode == SensingMode::Occluded && !line_of_sight(ground, origin, (x as i64, y as i64)) {
                continue;
            }
            let i = ground.index(x, y);
            agent.self_explored.cells_mut()[i] = 1;
            agent.self_obstacles.cells_mut()[i] |= ground.cells()[i];
        }
    }
}

/// Bresenham walk; the end cell itself may be an obstacle and still be seen.
fn line_of_sight(grid: &BinaryGrid, from: (i64, i64), to: (i64, i64)) -> bool {
    let (mut x, mut y) = from;
    let dx = (to.0 - x).abs();
    let dy = -(to.1 - y).abs();
    let sx = if x < to.0 { 1 } else { -1 };
    let sy = if y < to.1 { 1 } else { -1 };
    let mut err = dx + dy;
    while (x, y) != to {
        if (x, y) != from && grid.get_signed(x, y) == Some(1) {
            return false;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::disk_offsets;

    #[test]
    fn empty_map_gives_disk() {
        let ground = BinaryGrid::square(128, 0);
        let mut a = AgentState::new(0, Vec2::new(64.0, 64.0), 128);
        sense(&mut a, &ground, 30.0, SensingMode::Disk);
        assert_eq!(a.self_explored.count_ones(), disk_offsets(30.0).len());
        assert_eq!(a.self_obstacles.count_ones(), 0);
        let snapshot = (a.self_explored.clone(), a.self_obstacles.clone());
        sense(&mut a, &ground, 30.0, SensingMode::Disk);
        assert_eq!((a.self_explored.clone(), a.self_obstacles.clone()), snapshot);
    }

    #[test]
    fn disk_membership_boundary() {
        let mut ground = BinaryGrid::square(128, 0);
        ground.set(93, 64, 1);
        ground.set(64, 95, 1);
        let mut a = AgentState::new(0, Vec2::new(64.0, 64.0), 128);
        sense(&mut a, &ground, 30.0, SensingMode::Disk);
        assert_eq!(a.self_obstacles.get(93, 64), 1);
        assert_eq!(a.self_obstacles.get(64, 95), 0);
    }

    #[test]
    fn obstacle_map_stays_inside_explored_and_matches_truth() {
        let ground = BinaryGrid::from_fn(64, 64, |x, y| u8::from((x * 7 + y * 13) % 5 == 0));
        let mut a = AgentState::new(0, Vec2::new(20.0, 20.0), 64);
        for (x, y) in [(20.0, 20.0), (25.5, 30.2), (40.0, 41.0)] {
            a.position = Vec2::new(x, y);
            let before = a.self_explored.clone();
            sense(&mut a, &ground, 8.0, SensingMode::Disk);
            assert!(before.is_subset_of(&a.self_explored));
            assert!(a.self_obstacles.is_subset_of(&a.self_explored));
            for i in 0..ground.len() {
                if a.self_explored.cells()[i] == 1 {
                    assert_eq!(a.self_obstacles.cells()[i], ground.cells()[i]);
                }
            }
        }
    }

    #[test]
    fn occlusion_hides_cells_behind_walls() {
        let mut ground = BinaryGrid::square(64, 0);
        for y in 0..64 {
            ground.set(35, y, 1);
        }
        let mut open = AgentState::new(0, Vec2::new(30.0, 30.0), 64);
        let mut blocked = open.clone();
        sense(&mut open, &ground, 10.0, SensingMode::Disk);
        sense(&mut blocked, &ground, 10.0, SensingMode::Occluded);
        assert_eq!(open.self_explored.get(38, 30), 1);
        assert_eq!(blocked.self_explored.get(38, 30), 0);
        assert_eq!(blocked.self_obstacles.get(35, 30), 1);
        assert!(blocked.self_explored.is_subset_of(&open.self_explored));
    }
}
