//! Octile distance fields on a passability mask.

use crate::grid::BinaryGrid;

/// Cost of an axis-aligned move; a diagonal move costs [`DIAGONAL`].
pub const STRAIGHT: u32 = 5;
pub const DIAGONAL: u32 = 7;
pub const UNREACHED: u32 = u32::MAX;

const NEIGHBORS: [(i64, i64, u32); 8] = [
    (1, 0, STRAIGHT),
    (-1, 0, STRAIGHT),
    (0, 1, STRAIGHT),
    (0, -1, STRAIGHT),
    (1, 1, DIAGONAL),
    (1, -1, DIAGONAL),
    (-1, 1, DIAGONAL),
    (-1, -1, DIAGONAL),
];

/// Dense cost-to-go field from a set of source cells.
#[derive(Debug, Clone)]
pub struct DistanceField {
    width: usize,
    height: usize,
    cost: Vec<u32>,
}

impl DistanceField {
    /// Dial's algorithm over 8-connected passable cells. Sources are always
    /// seeded even when impassable, so a target inside an inflated wall
    /// still yields a usable field around it.
    pub fn compute(passable: &BinaryGrid, sources: &[(usize, usize)]) -> Self {
        let (w, h) = (passable.width(), passable.height());
        let mut cost = vec![UNREACHED; w * h];
        let ring = DIAGONAL as usize + 1;
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); ring];
        let mut pending = 0usize;
        for &(x, y) in sources {
            if x < w && y < h && cost[y * w + x] != 0 {
                cost[y * w + x] = 0;
                buckets[0].push(y * w + x);
                pending += 1;
            }
        }
        let cells = passable.cells();
        let mut current = 0u32;
        while pending > 0 {
            let slot = current as usize % ring;
            while let Some(i) = buckets[slot].pop() {
                pending -= 1;
                if cost[i] != current {
                    continue;
                }
                let (x, y) = ((i % w) as i64, (i / w) as i64);
                for &(dx, dy, step) in &NEIGHBORS {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if cells[j] == 0 {
                        continue;
                    }
                    let c = current + step;
                    if c < cost[j] {
                        cost[j] = c;
                        buckets[c as usize % ring].push(j);
                        pending += 1;
                    }
                }
            }
            current += 1;
        }
        Self {
            width: w,
            height: h,
            cost,
        }
    }

    pub fn cost(&self, x: usize, y: usize) -> u32 {
        self.cost[y * self.width + x]
    }

    pub fn cost_signed(&self, x: i64, y: i64) -> Option<u32> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return None;
        }
        Some(self.cost(x as usize, y as usize))
    }

    /// Approximate path length in pixels, `None` when unreached.
    pub fn distance(&self, x: usize, y: usize) -> Option<f64> {
        let c = self.cost(x, y);
        (c != UNREACHED).then(|| c as f64 / STRAIGHT as f64)
    }

    /// Follows the steepest descent from `start` for up to `steps` moves.
    pub fn descend(&self, start: (usize, usize), steps: usize) -> (usize, usize) {
        let (mut x, mut y) = start;
        for _ in 0..steps {
            let here = self.cost(x, y);
            let mut best = (here, x, y);
            for &(dx, dy, _) in &NEIGHBORS {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if let Some(c) = self.cost_signed(nx, ny) {
                    if c < best.0 {
                        best = (c, nx as usize, ny as usize);
                    }
                }
            }
            if best.0 == here {
                break;
            }
            (x, y) = (best.1, best.2);
        }
        (x, y)
    }
}
