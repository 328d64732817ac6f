use super::{read_pnm_token, FormatError};
use crate::image::{DepthImage, PixelMask, INVALID_DEPTH};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Meters per 16-bit PGM unit: one unit is 0.1 mm.
pub const DEPTH_SCALE_M: f64 = 1e-4;

/// 16-bit big-endian PGM; one unit = 0.1 mm, invalid depth stored as 0.
/// Depths beyond 6.5535 m do not fit and are rejected rather than
/// silently clipped.
pub fn write_depth16(w: &mut impl Write, depth: &DepthImage) -> Result<(), FormatError> {
    write!(w, "P5\n{} {}\n65535\n", depth.width(), depth.height())?;
    let mut bytes = Vec::with_capacity(depth.data().len() * 2);
    for &d in depth.data() {
        let unit = if d == INVALID_DEPTH {
            0u16
        } else {
            let scaled = (d as f64 / DEPTH_SCALE_M).round();
            if scaled > 65535.0 {
                return Err(FormatError::Unrepresentable(format!(
                    "depth {d} m exceeds 16-bit PGM range (6.5535 m)"
                )));
            }
            scaled as u16
        };
        bytes.extend_from_slice(&unit.to_be_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_depth16_file(path: &Path, depth: &DepthImage) -> Result<(), FormatError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_depth16(&mut w, depth)?;
    w.flush()?;
    Ok(())
}

pub fn read_depth16(r: impl Read) -> Result<DepthImage, FormatError> {
    const F: &str = "PGM16";
    let mut r = BufReader::new(r);
    let (width, height) = read_header(&mut r, F, 65535)?;
    let mut bytes = vec![0u8; (width * height) as usize * 2];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(2)
        .map(|b| {
            let unit = u16::from_be_bytes([b[0], b[1]]);
            if unit == 0 {
                INVALID_DEPTH
            } else {
                (unit as f64 * DEPTH_SCALE_M) as f32
            }
        })
        .collect();
    DepthImage::from_data(width, height, data)
        .map_err(|e| FormatError::malformed(F, e.to_string()))
}

pub fn read_depth16_file(path: &Path) -> Result<DepthImage, FormatError> {
    read_depth16(std::fs::File::open(path)?)
}

/// 8-bit PGM mask: 255 = set, 0 = clear.
pub fn write_mask8(w: &mut impl Write, mask: &PixelMask) -> Result<(), FormatError> {
    write!(w, "P5\n{} {}\n255\n", mask.width, mask.height)?;
    let bytes: Vec<u8> = (0..mask.height)
        .flat_map(|v| (0..mask.width).map(move |u| (u, v)))
        .map(|(u, v)| if mask.get(u, v) { 255 } else { 0 })
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_mask8_file(path: &Path, mask: &PixelMask) -> Result<(), FormatError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_mask8(&mut w, mask)?;
    w.flush()?;
    Ok(())
}

pub fn read_mask8(r: impl Read) -> Result<PixelMask, FormatError> {
    const F: &str = "PGM8";
    let mut r = BufReader::new(r);
    let (width, height) = read_header(&mut r, F, 255)?;
    let mut bytes = vec![0u8; (width * height) as usize];
    r.read_exact(&mut bytes)?;
    let mut mask = PixelMask::new(width, height, false);
    for (i, b) in bytes.iter().enumerate() {
        if *b != 0 {
            mask.set(i as u32 % width, i as u32 / width, true);
        }
    }
    Ok(mask)
}

pub fn read_mask8_file(path: &Path) -> Result<PixelMask, FormatError> {
    read_mask8(std::fs::File::open(path)?)
}

fn read_header(
    r: &mut impl Read,
    format: &'static str,
    expect_maxval: u32,
) -> Result<(u32, u32), FormatError> {
    if read_pnm_token(r, format)? != "P5" {
        return Err(FormatError::malformed(format, "not a binary PGM (P5)"));
    }
    let width: u32 = parse_token(r, format, "width")?;
    let height: u32 = parse_token(r, format, "height")?;
    let maxval: u32 = parse_token(r, format, "maxval")?;
    if maxval != expect_maxval {
        return Err(FormatError::malformed(
            format,
            format!("expected maxval {expect_maxval}, got {maxval}"),
        ));
    }
    if width == 0 || height == 0 {
        return Err(FormatError::malformed(format, "zero dimension"));
    }
    Ok((width, height))
}

fn parse_token(r: &mut impl Read, format: &'static str, what: &str) -> Result<u32, FormatError> {
    let token = read_pnm_token(r, format)?;
    token
        .parse()
        .map_err(|e| FormatError::malformed(format, format!("bad {what} {token:?}: {e}")))
}
