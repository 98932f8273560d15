//! Raster maps and the operations shared by every other module.
//!
//! Cell `(x, y)` sits at the integer point `(x, y)` in pixel space and is
//! stored row-major. Binary grids hold `0` or `1` in a `u8`; `1` means
//! obstacle (obstacle maps) or explored (exploration maps).

mod io;

pub use io::{read_pgm, read_real_grid, write_pgm, write_pgm_gray, write_real_grid, GridFileMode, REAL_GRID_MAGIC};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    cells: Vec<T>,
}

pub type BinaryGrid = Grid<u8>;
pub type RealGrid = Grid<f32>;

impl<T: Copy> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            cells: vec![value; width * height],
        }
    }

    pub fn square(side: usize, value: T) -> Self {
        Self::filled(side, side, value)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut cells = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                cells.push(f(x, y));
            }
        }
        Self { width, height, cells }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Side length; only meaningful for square grids.
    pub fn side(&self) -> usize {
        debug_assert_eq!(self.width, self.height);
        self.width
    }

    pub fn same_shape<U>(&self, other: &Grid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape<U>(&self, other: &Grid<U>) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected_w: self.width,
                expected_h: self.height,
                got_w: other.width,
                got_h: other.height,
            })
        }
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.cells[y * self.width + x]
    }

    /// Value at signed coordinates, or `None` outside the raster.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> Option<T> {
        self.in_bounds(x, y).then(|| self.get(x as usize, y as usize))
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        let i = self.index(x, y);
        self.cells[i] = value;
    }

    pub fn cells(&self) -> &[T] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [T] {
        &mut self.cells
    }

    pub fn into_cells(self) -> Vec<T> {
        self.cells
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            cells: self.cells.iter().map(|&c| f(c)).collect(),
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, cells: Vec<T>) -> Result<Self> {
        if cells.len() != width * height {
            return Err(Error::config(format!(
                "{} cells cannot fill a {width}x{height} grid",
                cells.len()
            )));
        }
        Ok(Self { width, height, cells })
    }
}

impl BinaryGrid {
    /// Builds a binary grid, rejecting any value outside `{0, 1}`.
    pub fn from_bits(width: usize, height: usize, cells: Vec<u8>) -> Result<Self> {
        if let Some(bad) = cells.iter().find(|&&c| c > 1) {
            return Err(Error::config(format!("binary grid cell value {bad}")));
        }
        Self::from_vec(width, height, cells)
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().map(|&c| c as usize).sum()
    }

    pub fn density(&self) -> f64 {
        self.count_ones() as f64 / self.len() as f64
    }

    pub fn is_set(&self, x: usize, y: usize) -> bool {
        self.get(x, y) != 0
    }

    pub fn not(&self) -> BinaryGrid {
        self.map(|c| 1 - c)
    }

    /// In-place cellwise OR with a grid of identical shape.
    pub fn or_assign(&mut self, other: &BinaryGrid) -> Result<()> {
        self.check_shape(other)?;
        for (a, &b) in self.cells.iter_mut().zip(&other.cells) {
            *a |= b;
        }
        Ok(())
    }

    pub fn and(&self, other: &BinaryGrid) -> Result<BinaryGrid> {
        self.check_shape(other)?;
        Ok(Grid {
            width: self.width,
            height: self.height,
            cells: self.cells.iter().zip(&other.cells).map(|(&a, &b)| a & b).collect(),
        })
    }

    /// True when every set cell of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryGrid) -> bool {
        self.same_shape(other) && self.cells.iter().zip(&other.cells).all(|(&a, &b)| a <= b)
    }

    pub fn to_real(&self) -> RealGrid {
        self.map(f32::from)
    }
}

/// Nonempty list of binary grids sharing one shape.
#[derive(Debug, Clone)]
pub struct GridStack {
    layers: Vec<BinaryGrid>,
}

impl GridStack {
    pub fn new(layers: Vec<BinaryGrid>) -> Result<Self> {
        let first = layers.first().ok_or(Error::EmptyStack)?;
        for g in &layers[1..] {
            first.check_shape(g)?;
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[BinaryGrid] {
        &self.layers
    }

    pub fn push(&mut self, grid: BinaryGrid) -> Result<()> {
        self.layers[0].check_shape(&grid)?;
        self.layers.push(grid);
        Ok(())
    }

    pub fn or_combine(&self) -> BinaryGrid {
        let mut acc = self.layers[0].clone();
        for g in &self.layers[1..] {
            for (a, &b) in acc.cells.iter_mut().zip(&g.cells) {
                *a |= b;
            }
        }
        acc
    }
}

/// Cellwise disjunction of a homogeneous stack.
pub fn or_combine(stack: &[BinaryGrid]) -> Result<BinaryGrid> {
    let first = stack.first().ok_or(Error::EmptyStack)?;
    let mut acc = first.clone();
    for g in &stack[1..] {
        acc.or_assign(g)?;
    }
    Ok(acc)
}

/// `1` where the value is at least `threshold`. Ties go to `1`.
pub fn binarize(grid: &RealGrid, threshold: f32) -> BinaryGrid {
    grid.map(|v| u8::from(v >= threshold))
}

/// Offsets `(dx, dy)` with `dx² + dy² <= radius²`.
pub fn disk_offsets(radius: f64) -> Vec<(i64, i64)> {
    let r = radius.max(0.0);
    let reach = r.floor() as i64;
    let r2 = r * r;
    let mut out = Vec::new();
    for dy in -reach..=reach {
        for dx in -reach..=reach {
            if (dx * dx + dy * dy) as f64 <= r2 {
                out.push((dx, dy));
            }
        }
    }
    out
}

/// Morphological dilation by a Euclidean disk.
pub fn dilate(grid: &BinaryGrid, radius: f64) -> BinaryGrid {
    let offsets = disk_offsets(radius);
    if offsets.len() <= 1 {
        return grid.clone();
    }
    let (w, h) = (grid.width as i64, grid.height as i64);
    let mut out = grid.clone();
    for y in 0..h {
        for x in 0..w {
            if grid.get(x as usize, y as usize) == 0 {
                continue;
            }
            // Interior obstacle cells are covered by their boundary neighbours' disks.
            let interior = x > 0
                && y > 0
                && x < w - 1
                && y < h - 1
                && grid.get(x as usize - 1, y as usize) != 0
                && grid.get(x as usize + 1, y as usize) != 0
                && grid.get(x as usize, y as usize - 1) != 0
                && grid.get(x as usize, y as usize + 1) != 0;
            if interior {
                continue;
            }
            for &(dx, dy) in &offsets {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && ny >= 0 && nx < w && ny < h {
                    out.cells[(ny * w + nx) as usize] = 1;
                }
            }
        }
    }
    out
}

/// Square window of side `2·radius + 1` centred on `center`.
///
/// Cells falling outside the source raster take `fill`.
pub fn crop_window<T: Copy>(grid: &Grid<T>, center: (i64, i64), radius: usize, fill: T) -> Grid<T> {
    let r = radius as i64;
    let side = 2 * radius + 1;
    Grid::from_fn(side, side, |x, y| {
        grid.get_signed(center.0 - r + x as i64, center.1 - r + y as i64)
            .unwrap_or(fill)
    })
}

/// Crop around `center` for observation building; out-of-map cells read as obstacle.
pub fn crop_disk(grid: &BinaryGrid, center: (i64, i64), radius: usize) -> BinaryGrid {
    crop_window(grid, center, radius, 1)
}

/// Mask of all cells except the one-pixel frame.
pub fn interior_mask(width: usize, height: usize) -> BinaryGrid {
    Grid::from_fn(width, height, |x, y| {
        u8::from(x > 0 && y > 0 && x + 1 < width && y + 1 < height)
    })
}

/// Share of mask cells whose OR-combined exploration value is set.
pub fn coverage_fraction(explored: &[BinaryGrid], mask: &BinaryGrid) -> Result<f64> {
    let collective = or_combine(explored)?;
    collective.check_shape(mask)?;
    Ok(masked_fraction(&collective, mask))
}

pub(crate) fn masked_fraction(grid: &BinaryGrid, mask: &BinaryGrid) -> f64 {
    let total = mask.count_ones();
    if total == 0 {
        return 0.0;
    }
    let hit: usize = grid
        .cells
        .iter()
        .zip(&mask.cells)
        .map(|(&g, &m)| (g & m) as usize)
        .sum();
    hit as f64 / total as f64
}

/// Agreement between ground truth and an obstacle map over explored cells.
///
/// Returns `None` when nothing is explored.
pub fn map_accuracy(ground: &BinaryGrid, obstacles: &BinaryGrid, explored: &BinaryGrid) -> Result<Option<f64>> {
    ground.check_shape(obstacles)?;
    ground.check_shape(explored)?;
    let mut agree = 0usize;
    let mut seen = 0usize;
    for ((&g, &o), &e) in ground.cells.iter().zip(&obstacles.cells).zip(&explored.cells) {
        if e != 0 {
            seen += 1;
            agree += usize::from(g == o);
        }
    }
    Ok((seen > 0).then(|| agree as f64 / seen as f64))
}
