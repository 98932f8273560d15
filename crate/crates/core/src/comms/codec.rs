//! Map codecs: grid → fixed-length latent vector → real-valued grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BinaryGrid, Grid, RealGrid};

pub trait MapCodec: Send + Sync {
    /// Side of the square grids this codec accepts.
    fn side(&self) -> usize;

    fn latent_size(&self) -> usize;

    fn encode(&self, grid: &BinaryGrid) -> Result<Vec<f32>>;

    /// Decoded values are clamped into `[0, 1]`.
    fn decode(&self, latent: &[f32]) -> Result<RealGrid>;

    fn name(&self) -> String;
}

fn check_input(grid: &BinaryGrid, side: usize) -> Result<()> {
    if grid.width() != side || grid.height() != side {
        return Err(Error::DimensionMismatch {
            expected_w: side,
            expected_h: side,
            got_w: grid.width(),
            got_h: grid.height(),
        });
    }
    Ok(())
}

fn check_latent(latent: &[f32], expected: usize) -> Result<()> {
    if latent.len() != expected {
        return Err(Error::format(
            "latent",
            format!("expected {expected} values, got {}", latent.len()),
        ));
    }
    Ok(())
}

/// Lossless: the latent is the flattened grid.
#[derive(Debug, Clone)]
pub struct IdentityCodec {
    side: usize,
}

impl IdentityCodec {
    pub fn new(side: usize) -> Self {
        Self { side }
    }
}

impl MapCodec for IdentityCodec {
    fn side(&self) -> usize {
        self.side
    }

    fn latent_size(&self) -> usize {
        self.side * self.side
    }

    fn encode(&self, grid: &BinaryGrid) -> Result<Vec<f32>> {
        check_input(grid, self.side)?;
        Ok(grid.cells().iter().map(|&c| f32::from(c)).collect())
    }

    fn decode(&self, latent: &[f32]) -> Result<RealGrid> {
        check_latent(latent, self.latent_size())?;
        Grid::from_vec(self.side, self.side, latent.iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }

    fn name(&self) -> String {
        "identity".into()
    }
}

/// Lossy: block means over `factor × factor` tiles, nearest-neighbour
/// upsampling on decode.
#[derive(Debug, Clone)]
pub struct DownsampleCodec {
    side: usize,
    factor: usize,
}

impl DownsampleCodec {
    pub fn new(side: usize, factor: usize) -> Result<Self> {
        if factor == 0 || !side.is_multiple_of(factor) {
            return Err(Error::NonDividingFactor { factor, side });
        }
        Ok(Self { side, factor })
    }

    fn blocks(&self) -> usize {
        self.side / self.factor
    }
}

impl MapCodec for DownsampleCodec {
    fn side(&self) -> usize {
        self.side
    }

    fn latent_size(&self) -> usize {
        self.blocks() * self.blocks()
    }

    fn encode(&self, grid: &BinaryGrid) -> Result<Vec<f32>> {
        check_input(grid, self.side)?;
        let (b, f) = (self.blocks(), self.factor);
        let mut sums = vec![0u32; b * b];
        for y in 0..self.side {
            let row = &grid.cells()[y * self.side..(y + 1) * self.side];
            let out = &mut sums[(y / f) * b..(y / f + 1) * b];
            for (x, &c) in row.iter().enumerate() {
                out[x / f] += c as u32;
            }
        }
        let area = (f * f) as f32;
        Ok(sums.into_iter().map(|s| s as f32 / area).collect())
    }

    fn decode(&self, latent: &[f32]) -> Result<RealGrid> {
        check_latent(latent, self.latent_size())?;
        let (b, f) = (self.blocks(), self.factor);
        Ok(Grid::from_fn(self.side, self.side, |x, y| {
            latent[(y / f) * b + x / f].clamp(0.0, 1.0)
        }))
    }

    fn name(&self) -> String {
        format!("downsample-{}", self.factor)
    }
}

/// Serializable codec choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
#[derive(Default)]
pub enum CodecKind {
    #[default]
    Identity,
    Downsample {
        factor: usize,
    },
}

impl CodecKind {
    pub fn build(&self, side: usize) -> Result<Box<dyn MapCodec>> {
        Ok(match *self {
            CodecKind::Identity => Box::new(IdentityCodec::new(side)),
            CodecKind::Downsample { factor } => Box::new(DownsampleCodec::new(side, factor)?),
        })
    }
}

impl std::str::FromStr for CodecKind {
    type Err = Error;

    /// Accepts `identity` or `downsample:<factor>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None if s == "identity" => Ok(CodecKind::Identity),
            Some(("downsample", f)) => f
                .parse()
                .map(|factor| CodecKind::Downsample { factor })
                .map_err(|_| Error::config(format!("bad downsample factor {f:?}"))),
            _ => Err(Error::config(format!("unknown codec {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::binarize;
    use proptest::prelude::*;

    #[test]
    fn identity_zero_map_encodes_to_zeros() {
        let c = IdentityCodec::new(8);
        assert!(c.encode(&BinaryGrid::square(8, 0)).unwrap().iter().all(|&v| v == 0.0));
        assert_eq!(c.latent_size(), 64);
    }

    #[test]
    fn downsample_reproduces_aligned_block() {
        let c = DownsampleCodec::new(8, 2).unwrap();
        let g = BinaryGrid::from_fn(8, 8, |x, y| u8::from((2..4).contains(&x) && (4..6).contains(&y)));
        let back = c.decode(&c.encode(&g).unwrap()).unwrap();
        assert_eq!(binarize(&back, 0.5), g);
        assert_eq!(c.latent_size(), 16);
    }

    #[test]
    fn downsample_checkerboard_decodes_to_half_then_one() {
        let c = DownsampleCodec::new(8, 2).unwrap();
        let g = BinaryGrid::from_fn(8, 8, |x, y| ((x + y) % 2) as u8);
        let back = c.decode(&c.encode(&g).unwrap()).unwrap();
        assert!(back.cells().iter().all(|&v| v == 0.5));
        assert_eq!(binarize(&back, 0.5).count_ones(), 64);
    }

    #[test]
    fn rejects_non_dividing_factor_and_bad_lengths() {
        assert!(matches!(
            DownsampleCodec::new(10, 3),
            Err(Error::NonDividingFactor { .. })
        ));
        let c = IdentityCodec::new(4);
        assert!(c.decode(&[0.0; 3]).is_err());
        assert!(c.encode(&BinaryGrid::square(5, 0)).is_err());
    }

    #[test]
    fn decode_clamps_range() {
        let c = DownsampleCodec::new(4, 2).unwrap();
        let g = c.decode(&[-0.3, 1.7, 0.2, 0.9]).unwrap();
        assert!(g.cells().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn parses_codec_names() {
        assert_eq!("identity".parse::<CodecKind>().unwrap(), CodecKind::Identity);
        assert_eq!(
            "downsample:4".parse::<CodecKind>().unwrap(),
            CodecKind::Downsample { factor: 4 }
        );
        assert!("downsample:x".parse::<CodecKind>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 48, rng_seed: proptest::test_runner::RngSeed::Fixed(21), ..ProptestConfig::default() })]

        #[test]
        fn codec_contract(bits in proptest::collection::vec(0u8..=1, 16 * 16), noise in proptest::collection::vec(-0.2f32..0.2, 64)) {
            let g = BinaryGrid::from_bits(16, 16, bits).unwrap();
            let id = IdentityCodec::new(16);
            let round = id.decode(&id.encode(&g).unwrap()).unwrap();
            prop_assert_eq!(binarize(&round, 0.5), g.clone());
            prop_assert_eq!(round, g.to_real());

            let ds = DownsampleCodec::new(16, 2).unwrap();
            let mut latent = ds.encode(&g).unwrap();
            for (l, n) in latent.iter_mut().zip(&noise) {
                *l += n;
            }
            let out = ds.decode(&latent).unwrap();
            prop_assert!(out.same_shape(&g));
            prop_assert!(out.cells().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
