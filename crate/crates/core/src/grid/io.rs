//! Raster serialisation.
//!
//! Binary maps travel as 8-bit PGM (P5): obstacle = 0 (black), free = 255.
//! Real-valued grids use a small little-endian float format: a 16-byte
//! header (`magic`, side `L`, mode, reserved) followed by `L²` `f32` cells.

use std::io::{Read, Write};

use super::{BinaryGrid, Grid, RealGrid};
use crate::error::{Error, Result};

pub const REAL_GRID_MAGIC: [u8; 4] = *b"OGRD";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum GridFileMode {
    Binary = 0,
    Real = 1,
}

/// Writes a binary map as P5 with obstacles black.
pub fn write_pgm<W: Write>(grid: &BinaryGrid, out: W) -> Result<()> {
    let pixels: Vec<u8> = grid.cells().iter().map(|&c| if c != 0 { 0 } else { 255 }).collect();
    write_pgm_gray(grid.width(), grid.height(), &pixels, out)
}

/// Writes raw 8-bit gray levels as P5.
pub fn write_pgm_gray<W: Write>(width: usize, height: usize, pixels: &[u8], mut out: W) -> Result<()> {
    if pixels.len() != width * height {
        return Err(Error::format("pgm", "pixel count does not match dimensions"));
    }
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.write_all(pixels)?;
    out.flush()?;
    Ok(())
}

fn next_token<'a>(data: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::format("pgm", "truncated header"));
    }
    Ok(&data[start..*pos])
}

fn parse_usize(tok: &[u8]) -> Result<usize> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::format("pgm", format!("bad header field {:?}", String::from_utf8_lossy(tok))))
}

/// Reads a P5 or P2 graymap into a binary map.
///
/// Pixels darker than half of `maxval` become obstacles, so hand-drawn maps
/// with anti-aliased edges load sensibly.
pub fn read_pgm<R: Read>(mut input: R) -> Result<BinaryGrid> {
    let mut data = Vec::new();
    input.read_to_end(&mut data)?;
    let mut pos = 0;
    let magic = next_token(&data, &mut pos)?;
    let ascii = match magic {
        b"P5" => false,
        b"P2" => true,
        other => {
            return Err(Error::format(
                "pgm",
                format!("unsupported magic {:?}", String::from_utf8_lossy(other)),
            ))
        }
    };
    let width = parse_usize(next_token(&data, &mut pos)?)?;
    let height = parse_usize(next_token(&data, &mut pos)?)?;
    let maxval = parse_usize(next_token(&data, &mut pos)?)?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::format("pgm", format!("maxval {maxval} out of range")));
    }
    let n = width * height;
    let mut values = Vec::with_capacity(n);
    if ascii {
        for _ in 0..n {
            values.push(parse_usize(next_token(&data, &mut pos)?)?);
        }
    } else {
        // Exactly one whitespace byte separates maxval from the raster.
        pos += 1;
        let bytes_per = if maxval < 256 { 1 } else { 2 };
        let raster = data
            .get(pos..pos + n * bytes_per)
            .ok_or_else(|| Error::format("pgm", "raster shorter than header promises"))?;
        if bytes_per == 1 {
            values.extend(raster.iter().map(|&b| b as usize));
        } else {
            values.extend(
                raster
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as usize),
            );
        }
    }
    let cells = values.into_iter().map(|v| u8::from(2 * v < maxval)).collect();
    Grid::from_vec(width, height, cells)
}

fn write_header<W: Write>(out: &mut W, side: usize, mode: GridFileMode) -> Result<()> {
    out.write_all(&REAL_GRID_MAGIC)?;
    out.write_all(&(side as u32).to_le_bytes())?;
    out.write_all(&(mode as u32).to_le_bytes())?;
    out.write_all(&0u32.to_le_bytes())?;
    Ok(())
}

/// Writes a square real-valued grid in the float raster format.
pub fn write_real_grid<W: Write>(grid: &RealGrid, mode: GridFileMode, mut out: W) -> Result<()> {
    if grid.width() != grid.height() {
        return Err(Error::format("float grid", "only square grids are supported"));
    }
    write_header(&mut out, grid.width(), mode)?;
    let mut buf = Vec::with_capacity(grid.len() * 4);
    for &v in grid.cells() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn read_real_grid<R: Read>(mut input: R) -> Result<(RealGrid, GridFileMode)> {
    let mut header = [0u8; 16];
    input.read_exact(&mut header)?;
    if header[0..4] != REAL_GRID_MAGIC {
        return Err(Error::format("float grid", "bad magic"));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().expect("4-byte slice"));
    let side = word(4) as usize;
    let mode = match word(8) {
        0 => GridFileMode::Binary,
        1 => GridFileMode::Real,
        m => return Err(Error::format("float grid", format!("unknown mode {m}"))),
    };
    let mut body = vec![0u8; side * side * 4];
    input.read_exact(&mut body)?;
    let cells: Vec<f32> = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    if mode == GridFileMode::Binary && cells.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::format("float grid", "binary-mode grid holds non-binary values"));
    }
    Ok((Grid::from_vec(side, side, cells)?, mode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pgm_polarity_and_header() {
        let g = BinaryGrid::from_bits(3, 2, vec![1, 0, 0, 0, 1, 0]).unwrap();
        let mut buf = Vec::new();
        write_pgm(&g, &mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(&buf[buf.len() - 6..], &[0, 255, 255, 255, 0, 255]);
        assert_eq!(read_pgm(&buf[..]).unwrap(), g);
    }

    #[test]
    fn reads_ascii_pgm_with_comments() {
        let src = b"P2\n# hand drawn\n2 2\n15\n0 15\n8 7\n";
        let g = read_pgm(&src[..]).unwrap();
        assert_eq!(g.cells(), &[1, 0, 0, 1]);
    }

    #[test]
    fn rejects_truncated_raster() {
        let src = b"P5\n4 4\n255\n\x00\x00";
        assert!(read_pgm(&src[..]).is_err());
        assert!(read_pgm(&b"P6\n1 1\n255\n\x00"[..]).is_err());
    }

    #[test]
    fn float_grid_header_is_sixteen_bytes() {
        let g = RealGrid::from_vec(2, 2, vec![0.0, 0.25, 0.5, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_real_grid(&g, GridFileMode::Real, &mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 16);
        assert_eq!(&buf[0..4], b"OGRD");
        assert_eq!(&buf[4..8], &2u32.to_le_bytes());
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(&buf[20..24], &0.25f32.to_le_bytes());
    }

    #[test]
    fn binary_mode_float_grid_validates_values() {
        let g = RealGrid::from_vec(1, 1, vec![0.5]).unwrap();
        let mut buf = Vec::new();
        write_real_grid(&g, GridFileMode::Binary, &mut buf).unwrap();
        assert!(read_real_grid(&buf[..]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 32, rng_seed: proptest::test_runner::RngSeed::Fixed(3), ..ProptestConfig::default() })]

        #[test]
        fn pgm_and_float_roundtrip(side in 1usize..20, seed in any::<u64>()) {
            let g = BinaryGrid::from_fn(side, side, |x, y| ((seed >> ((x * 7 + y * 3) % 64)) & 1) as u8);
            let mut buf = Vec::new();
            write_pgm(&g, &mut buf).unwrap();
            prop_assert_eq!(read_pgm(&buf[..]).unwrap(), g.clone());

            let real = g.to_real().map(|v| v * 0.75);
            let mut fbuf = Vec::new();
            write_real_grid(&real, GridFileMode::Real, &mut fbuf).unwrap();
            let (back, mode) = read_real_grid(&fbuf[..]).unwrap();
            prop_assert_eq!(back, real);
            prop_assert_eq!(mode, GridFileMode::Real);
        }
    }
}
