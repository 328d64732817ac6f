use super::FormatError;
use crate::image::DepthImage;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"DPTH";

/// Raw float depth: 16-byte header (magic "DPTH", u32 width, u32 height,
/// u32 reserved = 0) followed by row-major f32 meters. All integers and
/// floats little-endian. Lossless, unlike the 0.1 mm-quantized PGM.
pub fn write(w: &mut impl Write, depth: &DepthImage) -> Result<(), FormatError> {
    w.write_all(MAGIC)?;
    w.write_all(&depth.width().to_le_bytes())?;
    w.write_all(&depth.height().to_le_bytes())?;
    w.write_all(&0u32.to_le_bytes())?;
    let mut bytes = Vec::with_capacity(depth.data().len() * 4);
    for &d in depth.data() {
        bytes.extend_from_slice(&d.to_le_bytes());
    }
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_file(path: &Path, depth: &DepthImage) -> Result<(), FormatError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write(&mut w, depth)?;
    w.flush()?;
    Ok(())
}

pub fn read(r: impl Read) -> Result<DepthImage, FormatError> {
    const F: &str = "DPTH";
    let mut r = BufReader::new(r);
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(FormatError::malformed(F, "bad magic"));
    }
    let width = u32::from_le_bytes(header[4..8].try_into().unwrap());
    let height = u32::from_le_bytes(header[8..12].try_into().unwrap());
    if width == 0 || height == 0 || (width as u64) * (height as u64) > (1 << 28) {
        return Err(FormatError::malformed(
            F,
            format!("implausible dimensions {width}x{height}"),
        ));
    }
    let mut bytes = vec![0u8; (width * height) as usize * 4];
    r.read_exact(&mut bytes)?;
    let data = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    DepthImage::from_data(width, height, data)
        .map_err(|e| FormatError::malformed(F, e.to_string()))
}

pub fn read_file(path: &Path) -> Result<DepthImage, FormatError> {
    read(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::INVALID_DEPTH;

    #[test]
    fn round_trip_is_bitwise_exact() {
        let mut img = DepthImage::new_invalid(3, 2);
        img.set(0, 0, 0.31400001);
        img.set(2, 1, 0.46789);
        let mut buf = Vec::new();
        write(&mut buf, &img).unwrap();
        assert_eq!(buf.len(), 16 + 6 * 4);
        assert_eq!(&buf[0..4], b"DPTH");
        let back = read(buf.as_slice()).unwrap();
        assert_eq!(back, img);
        assert_eq!(back.get(1, 1), INVALID_DEPTH);
    }

    #[test]
    fn rejects_wrong_magic() {
        let mut buf = Vec::new();
        write(&mut buf, &DepthImage::new_invalid(1, 1)).unwrap();
        buf[0] = b'X';
        assert!(read(buf.as_slice()).is_err());
    }

    #[test]
    fn rejects_truncated_payload() {
        let mut buf = Vec::new();
        write(&mut buf, &DepthImage::new_invalid(4, 4)).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read(buf.as_slice()).is_err());
    }
}
