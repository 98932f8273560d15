//! Procedural maps from masked gradient-noise layers.
//!
//! Two components are built, one from coarse layers and one from fine
//! layers. Each component is a thresholded base layer ANDed with a
//! thresholded mask layer; the base threshold is `1 - difficulty`. A third,
//! very coarse layer picks which component shows through where. Finally the
//! centre is cleared for spawning and a one-pixel obstacle frame is added.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, Grid, RealGrid};
use crate::rng::{self, stream, SimRng};

/// Crop radius used at the reference map size of 512 px.
pub const REFERENCE_CROP_RADIUS: f64 = 60.0;
pub const REFERENCE_SIZE: usize = 512;
pub const NOISE_ALGORITHM: &str = "gradient-noise/smootherstep/min-max";

/// A normalised noise raster. `octaves` is the number of lattice cells
/// spanning the map side, i.e. the spatial frequency of the layer.
#[derive(Debug, Clone)]
pub struct NoiseLayer {
    pub octaves: u32,
    pub values: RealGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OctaveRange {
    pub min: u32,
    pub max: u32,
}

impl OctaveRange {
    pub const fn new(min: u32, max: u32) -> Self {
        Self { min, max }
    }

    fn draw(&self, rng: &mut SimRng) -> u32 {
        rng.random_range(self.min..=self.max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapGenConfig {
    pub size: usize,
    pub crop_radius: f64,
    pub difficulty: f64,
    pub seed: u64,
    pub large_octaves: OctaveRange,
    pub small_octaves: OctaveRange,
    pub mask_octaves: OctaveRange,
}

impl MapGenConfig {
    /// Defaults with the crop radius scaled from 60 px at 512 px.
    pub fn new(size: usize, difficulty: f64, seed: u64) -> Self {
        Self {
            size,
            crop_radius: default_crop_radius(size),
            difficulty,
            seed,
            large_octaves: OctaveRange::new(7, 12),
            small_octaves: OctaveRange::new(15, 20),
            mask_octaves: OctaveRange::new(1, 3),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 8 {
            return Err(Error::config(format!("map size {} below 8", self.size)));
        }
        if !(0.0..=1.0).contains(&self.difficulty) {
            return Err(Error::config(format!("difficulty {} outside [0, 1]", self.difficulty)));
        }
        if !(self.crop_radius >= 0.0 && self.crop_radius < self.size as f64 / 2.0) {
            return Err(Error::config(format!(
                "crop radius {} must be below half the map size",
                self.crop_radius
            )));
        }
        for (name, r) in [
            ("large", self.large_octaves),
            ("small", self.small_octaves),
            ("mask", self.mask_octaves),
        ] {
            if r.min == 0 || r.min > r.max {
                return Err(Error::config(format!(
                    "{name} octave range [{}, {}] is empty",
                    r.min, r.max
                )));
            }
            check_spacing(self.size, r.max)?;
        }
        Ok(())
    }
}

pub fn default_crop_radius(size: usize) -> f64 {
    (REFERENCE_CROP_RADIUS * size as f64 / REFERENCE_SIZE as f64).round()
}

fn check_spacing(size: usize, octaves: u32) -> Result<()> {
    if octaves as usize > size {
        return Err(Error::config(format!(
            "{octaves} octaves over {size} px puts lattice points closer than one pixel"
        )));
    }
    Ok(())
}

#[inline]
fn smootherstep(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

/// One gradient-noise layer, min-max normalised to `[0, 1]`.
pub fn perlin_layer(size: usize, octaves: u32, seed: u64) -> Result<NoiseLayer> {
    if size < 8 {
        return Err(Error::config(format!("layer size {size} below 8")));
    }
    if octaves == 0 {
        return Err(Error::config("a layer needs at least one octave"));
    }
    check_spacing(size, octaves)?;

    let lattice = octaves as usize + 1;
    let mut grad_rng = rng::stream_rng(seed, stream::MAPGEN_LAYER, octaves as u64);
    let gradients: Vec<(f64, f64)> = (0..lattice * lattice)
        .map(|_| {
            let a = grad_rng.random::<f64>() * TAU;
            (a.cos(), a.sin())
        })
        .collect();

    let scale = octaves as f64 / size as f64;
    let mut raw = Vec::with_capacity(size * size);
    for py in 0..size {
        let v = (py as f64 + 0.5) * scale;
        let cy = (v.floor() as usize).min(octaves as usize - 1);
        let fy = v - cy as f64;
        let sy = smootherstep(fy);
        for px in 0..size {
            let u = (px as f64 + 0.5) * scale;
            let cx = (u.floor() as usize).min(octaves as usize - 1);
            let fx = u - cx as f64;
            let corner = |ix: usize, iy: usize, dx: f64, dy: f64| {
                let (gx, gy) = gradients[(cy + iy) * lattice + cx + ix];
                gx * dx + gy * dy
            };
            let n00 = corner(0, 0, fx, fy);
            let n10 = corner(1, 0, fx - 1.0, fy);
            let n01 = corner(0, 1, fx, fy - 1.0);
            let n11 = corner(1, 1, fx - 1.0, fy - 1.0);
            let sx = smootherstep(fx);
            let top = n00 + sx * (n10 - n00);
            let bottom = n01 + sx * (n11 - n01);
            raw.push(top + sy * (bottom - top));
        }
    }

    let (lo, hi) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    let values = raw
        .into_iter()
        .map(|v| if span > 0.0 { ((v - lo) / span) as f32 } else { 0.5 })
        .collect();
    Ok(NoiseLayer {
        octaves,
        values: Grid::from_vec(size, size, values)?,
    })
}

/// `1` where the layer strictly exceeds `threshold`.
pub fn threshold_layer(layer: &NoiseLayer, threshold: f64) -> BinaryGrid {
    layer.values.map(|v| u8::from(v as f64 > threshold))
}

/// A thresholded base/mask pair and their conjunction.
#[derive(Debug, Clone)]
pub struct Component {
    pub base: BinaryGrid,
    pub mask: BinaryGrid,
    pub map: BinaryGrid,
    pub base_octaves: u32,
    pub mask_octaves: u32,
}

/// Builds one component. Octave counts and layer seeds come from `rng`, so
/// the draws are identical for every difficulty.
pub fn generate_component(size: usize, difficulty: f64, octaves: OctaveRange, rng: &mut SimRng) -> Result<Component> {
    if !(0.0..=1.0).contains(&difficulty) {
        return Err(Error::config(format!("difficulty {difficulty} outside [0, 1]")));
    }
    let ease = 1.0 - difficulty;
    let base_octaves = octaves.draw(rng);
    let base_layer = perlin_layer(size, base_octaves, rng.random())?;
    let mask_octaves = octaves.draw(rng);
    let mask_layer = perlin_layer(size, mask_octaves, rng.random())?;
    let base = threshold_layer(&base_layer, ease);
    let mask = threshold_layer(&mask_layer, 0.5);
    let map = base.and(&mask)?;
    Ok(Component {
        base,
        mask,
        map,
        base_octaves,
        mask_octaves,
    })
}

/// Octave counts actually drawn for a map; goes into sidecar metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DrawnOctaves {
    pub large_base: u32,
    pub large_mask: u32,
    pub small_base: u32,
    pub small_mask: u32,
    pub selector: u32,
}

#[derive(Debug, Clone)]
pub struct GeneratedMap {
    pub grid: BinaryGrid,
    pub octaves: DrawnOctaves,
}

pub fn generate_map(config: &MapGenConfig) -> Result<GeneratedMap> {
    config.validate()?;
    let size = config.size;
    let mut rng = rng::stream_rng(config.seed, stream::MAPGEN_OCTAVES, 0);

    let large = generate_component(size, config.difficulty, config.large_octaves, &mut rng)?;
    let small = generate_component(size, config.difficulty, config.small_octaves, &mut rng)?;
    let selector_octaves = config.mask_octaves.draw(&mut rng);
    let selector = threshold_layer(&perlin_layer(size, selector_octaves, rng.random())?, 0.5);

    let mut cells: Vec<u8> = large
        .map
        .cells()
        .iter()
        .zip(small.map.cells())
        .zip(selector.cells())
        .map(|((&l, &s), &m)| (l & m) | (s & (1 - m)))
        .collect();

    let center = size as f64 / 2.0;
    let r2 = config.crop_radius * config.crop_radius;
    for y in 0..size {
        for x in 0..size {
            let (dx, dy) = (x as f64 - center, y as f64 - center);
            if dx * dx + dy * dy <= r2 {
                cells[y * size + x] = 0;
            }
            if x == 0 || y == 0 || x == size - 1 || y == size - 1 {
                cells[y * size + x] = 1;
            }
        }
    }

    Ok(GeneratedMap {
        grid: Grid::from_vec(size, size, cells)?,
        octaves: DrawnOctaves {
            large_base: large.base_octaves,
            large_mask: large.mask_octaves,
            small_base: small.base_octaves,
            small_mask: small.mask_octaves,
            selector: selector_octaves,
        },
    })
}
