use super::{read_pnm_token, FormatError};
use crate::image::RgbImage;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

/// Binary PPM (P6), 8 bits per channel.
pub fn write_rgb(w: &mut impl Write, img: &RgbImage) -> Result<(), FormatError> {
    write!(w, "P6\n{} {}\n255\n", img.width(), img.height())?;
    w.write_all(img.data())?;
    Ok(())
}

pub fn write_rgb_file(path: &Path, img: &RgbImage) -> Result<(), FormatError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_rgb(&mut w, img)?;
    w.flush()?;
    Ok(())
}

pub fn read_rgb(r: impl Read) -> Result<RgbImage, FormatError> {
    const F: &str = "PPM";
    let mut r = BufReader::new(r);
    if read_pnm_token(&mut r, F)? != "P6" {
        return Err(FormatError::malformed(F, "not a binary PPM (P6)"));
    }
    let parse = |r: &mut BufReader<_>, what: &str| -> Result<u32, FormatError> {
        let token = read_pnm_token(r, F)?;
        token
            .parse()
            .map_err(|e| FormatError::malformed(F, format!("bad {what} {token:?}: {e}")))
    };
    let width = parse(&mut r, "width")?;
    let height = parse(&mut r, "height")?;
    let maxval = parse(&mut r, "maxval")?;
    if maxval != 255 {
        return Err(FormatError::malformed(F, format!("maxval {maxval} != 255")));
    }
    if width == 0 || height == 0 {
        return Err(FormatError::malformed(F, "zero dimension"));
    }
    let mut data = vec![0u8; (width * height) as usize * 3];
    r.read_exact(&mut data)?;
    Ok(RgbImage::from_data(width, height, data)
        .map_err(|e| FormatError::malformed(F, e.to_string()))?)
}

pub fn read_rgb_file(path: &Path) -> Result<RgbImage, FormatError> {
    read_rgb(std::fs::File::open(path)?)
}
