//! Frontier-based waypoint selection.
//!
//! A frontier cell is a known-free cell with an unexplored 4-neighbour.
//! Frontier cells are grouped into 8-connected clusters; each cluster is
//! represented by its reachable member nearest the cluster centroid.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::planner::DistanceField;
use crate::geom::Vec2;
use crate::grid::{dilate, BinaryGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrontierParams {
    /// Candidates closer than this are skipped while farther ones exist.
    pub exclusion_radius: f64,
    /// Obstacle inflation used for reachability and random fallbacks.
    pub clearance: f64,
    /// Candidates within this distance of a neighbour's target pay `claim_penalty`.
    pub claim_radius: f64,
    pub claim_penalty: f64,
    /// Clusters are split into segments no wider than this around their
    /// first cell, so a long frontier yields several local targets.
    pub segment_radius: f64,
    /// Extra cost, at most this many pixels, for candidates behind the
    /// current heading.
    pub heading_weight: f64,
}

impl Default for FrontierParams {
    fn default() -> Self {
        Self {
            exclusion_radius: 40.0,
            clearance: 4.0,
            claim_radius: 60.0,
            claim_penalty: 120.0,
            segment_radius: 30.0,
            heading_weight: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontierCluster {
    pub cells: Vec<(usize, usize)>,
    pub centroid: Vec2,
}

pub fn frontier_cells(explored: &BinaryGrid, obstacles: &BinaryGrid) -> BinaryGrid {
    let (w, h) = (explored.width() as i64, explored.height() as i64);
    BinaryGrid::from_fn(explored.width(), explored.height(), |x, y| {
        if explored.get(x, y) == 0 || obstacles.get(x, y) != 0 {
            return 0;
        }
        let (x, y) = (x as i64, y as i64);
        let open = [(1, 0), (-1, 0), (0, 1), (0, -1)].iter().any(|&(dx, dy)| {
            let (nx, ny) = (x + dx, y + dy);
            nx >= 0 && ny >= 0 && nx < w && ny < h && explored.get(nx as usize, ny as usize) == 0
        });
        u8::from(open)
    })
}

pub fn frontier_clusters(explored: &BinaryGrid, obstacles: &BinaryGrid) -> Vec<FrontierCluster> {
    group_frontier(explored, obstacles, f64::INFINITY)
}

/// Frontier clusters split into pieces of at most `radius` around a seed cell.
pub fn frontier_segments(explored: &BinaryGrid, obstacles: &BinaryGrid, radius: f64) -> Vec<FrontierCluster> {
    group_frontier(explored, obstacles, radius)
}

fn group_frontier(explored: &BinaryGrid, obstacles: &BinaryGrid, radius: f64) -> Vec<FrontierCluster> {
    let frontier = frontier_cells(explored, obstacles);
    let (w, h) = (frontier.width(), frontier.height());
    let r2 = radius * radius;
    let mut seen = vec![false; w * h];
    let mut clusters = Vec::new();
    for start in 0..w * h {
        if frontier.cells()[start] == 0 || seen[start] {
            continue;
        }
        seen[start] = true;
        let (sx0, sy0) = ((start % w) as i64, (start / w) as i64);
        let mut stack = vec![start];
        let mut cells = Vec::new();
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            cells.push((x, y));
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    if (((nx - sx0).pow(2) + (ny - sy0).pow(2)) as f64) > r2 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if frontier.cells()[j] != 0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        cells.sort_unstable_by_key(|&(x, y)| (y, x));
        let n = cells.len() as f64;
        let (sx, sy) = cells
            .iter()
            .fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x as f64, sy + y as f64));
        clusters.push(FrontierCluster {
            cells,
            centroid: Vec2::new(sx / n, sy / n),
        });
    }
    clusters
}

/// Uniformly random interior cell that is free after inflating `obstacles`
/// by `clearance`. Falls back to `fallback` when no such cell exists.
pub fn random_free_cell<R: Rng + ?Sized>(obstacles: &BinaryGrid, clearance: f64, fallback: Vec2, rng: &mut R) -> Vec2 {
    let inflated = dilate(obstacles, clearance);
    let (w, h) = (obstacles.width(), obstacles.height());
    let valid: Vec<usize> = (0..w * h)
        .filter(|&i| {
            let (x, y) = (i % w, i / w);
            x > 0 && y > 0 && x + 1 < w && y + 1 < h && inflated.cells()[i] == 0
        })
        .collect();
    if valid.is_empty() {
        return fallback;
    }
    let i = valid[rng.random_range(0..valid.len())];
    Vec2::new((i % w) as f64, (i / w) as f64)
}

/// Nearest frontier with default parameters and no coordination.
pub fn frontier_waypoint<R: Rng + ?Sized>(
    explored: &BinaryGrid,
    obstacles: &BinaryGrid,
    position: Vec2,
    rng: &mut R,
) -> Vec2 {
    frontier_waypoint_with(
        explored,
        obstacles,
        position,
        Vec2::ZERO,
        &[],
        &FrontierParams::default(),
        rng,
    )
}

/// Like [`nearest_frontier`], falling back to a random free cell when the
/// map has no frontier left.
pub fn frontier_waypoint_with<R: Rng + ?Sized>(
    explored: &BinaryGrid,
    obstacles: &BinaryGrid,
    position: Vec2,
    heading: Vec2,
    claimed: &[Vec2],
    params: &FrontierParams,
    rng: &mut R,
) -> Vec2 {
    nearest_frontier(explored, obstacles, position, heading, claimed, params)
        .unwrap_or_else(|| random_free_cell(obstacles, params.clearance, position, rng))
}

/// Cheapest frontier segment by path length over known-free cells, plus a
/// penalty for segments already claimed by nearby robots.
pub fn nearest_frontier(
    explored: &BinaryGrid,
    obstacles: &BinaryGrid,
    position: Vec2,
    heading: Vec2,
    claimed: &[Vec2],
    params: &FrontierParams,
) -> Option<Vec2> {
    let heading = heading.normalized();
    let clusters = frontier_segments(explored, obstacles, params.segment_radius);
    if clusters.is_empty() {
        return None;
    }

    let inflated = dilate(obstacles, params.clearance);
    let passable = BinaryGrid::from_fn(explored.width(), explored.height(), |x, y| {
        u8::from(explored.get(x, y) != 0 && inflated.get(x, y) == 0)
    });
    let hi = explored.width() as f64 - 1.0;
    let start = (
        position.x.round().clamp(0.0, hi) as usize,
        position.y.round().clamp(0.0, (explored.height() - 1) as f64) as usize,
    );
    let field = DistanceField::compute(&passable, &[start]);

    // (cost, target, euclidean distance from the robot)
    let mut reachable: Vec<(f64, Vec2, f64)> = Vec::new();
    let mut unreachable: Vec<(f64, Vec2, f64)> = Vec::new();
    for c in &clusters {
        let mut best: Option<(f64, (usize, usize))> = None;
        for &(x, y) in &c.cells {
            if field.distance(x, y).is_some() {
                let d = Vec2::new(x as f64, y as f64).distance(c.centroid);
                if best.is_none_or(|(b, _)| d < b) {
                    best = Some((d, (x, y)));
                }
            }
        }
        let penalty = |t: Vec2| {
            let claim = if claimed.iter().any(|q| q.distance(t) <= params.claim_radius) {
                params.claim_penalty
            } else {
                0.0
            };
            let turn = if heading == Vec2::ZERO {
                0.0
            } else {
                0.5 * (1.0 - heading.dot((t - position).normalized()))
            };
            claim + params.heading_weight * turn
        };
        match best {
            Some((_, (x, y))) => {
                let t = Vec2::new(x as f64, y as f64);
                let path = field.distance(x, y).unwrap_or(f64::INFINITY);
                reachable.push((path + penalty(t), t, t.distance(position)));
            }
            None => {
                let &(x, y) = c
                    .cells
                    .iter()
                    .min_by(|a, b| {
                        let da = Vec2::new(a.0 as f64, a.1 as f64).distance(c.centroid);
                        let db = Vec2::new(b.0 as f64, b.1 as f64).distance(c.centroid);
                        da.total_cmp(&db)
                    })
                    .expect("clusters are nonempty");
                let t = Vec2::new(x as f64, y as f64);
                unreachable.push((t.distance(position) + penalty(t), t, t.distance(position)));
            }
        }
    }
    let pool = if reachable.is_empty() { unreachable } else { reachable };
    let has_far = pool.iter().any(|&(_, _, d)| d > params.exclusion_radius);
    pool.into_iter()
        .filter(|&(_, _, d)| !has_far || d > params.exclusion_radius)
        .min_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.y.total_cmp(&b.1.y))
                .then(a.1.x.total_cmp(&b.1.x))
        })
        .map(|(_, t, _)| t)
}
