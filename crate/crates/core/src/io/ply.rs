use super::FormatError;
use crate::cloud::PointCloud;
use nalgebra::Point3;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

/// ASCII PLY, vertices only, coordinates in meters at 6 decimal places.
pub fn write_cloud(w: &mut impl Write, cloud: &PointCloud) -> Result<(), FormatError> {
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", cloud.len())?;
    writeln!(w, "property float x")?;
    writeln!(w, "property float y")?;
    writeln!(w, "property float z")?;
    writeln!(w, "end_header")?;
    for p in cloud.points() {
        writeln!(w, "{:.6} {:.6} {:.6}", p.x, p.y, p.z)?;
    }
    Ok(())
}

pub fn write_cloud_file(path: &Path, cloud: &PointCloud) -> Result<(), FormatError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_cloud(&mut w, cloud)?;
    w.flush()?;
    Ok(())
}

pub fn read_cloud(r: impl Read) -> Result<PointCloud, FormatError> {
    const F: &str = "PLY";
    let mut lines = BufReader::new(r).lines();
    let mut next = || -> Result<String, FormatError> {
        lines
            .next()
            .transpose()?
            .ok_or_else(|| FormatError::malformed(F, "unexpected end of file"))
    };
    if next()?.trim() != "ply" {
        return Err(FormatError::malformed(F, "missing 'ply' magic"));
    }
    if next()?.trim() != "format ascii 1.0" {
        return Err(FormatError::malformed(F, "only ascii 1.0 supported"));
    }
    let mut count: Option<usize> = None;
    let mut properties = Vec::new();
    loop {
        let line = next()?;
        let line = line.trim();
        if line == "end_header" {
            break;
        }
        if line.starts_with("comment") {
            continue;
        }
        if let Some(rest) = line.strip_prefix("element vertex ") {
            count = Some(rest.trim().parse().map_err(|e| {
                FormatError::malformed(F, format!("bad vertex count {rest:?}: {e}"))
            })?);
        } else if let Some(rest) = line.strip_prefix("element ") {
            return Err(FormatError::malformed(
                F,
                format!("unsupported element {rest:?}"),
            ));
        } else if let Some(rest) = line.strip_prefix("property ") {
            properties.push(rest.trim().to_string());
        }
    }
    if properties != ["float x", "float y", "float z"] {
        return Err(FormatError::malformed(
            F,
            format!("expected float x/y/z properties, got {properties:?}"),
        ));
    }
    let count = count.ok_or_else(|| FormatError::malformed(F, "missing element vertex"))?;
    let mut points = Vec::with_capacity(count);
    for i in 0..count {
        let line = next()?;
        let mut it = line.split_ascii_whitespace().map(|t| t.parse::<f64>());
        let (x, y, z) = match (it.next(), it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y)), Some(Ok(z))) => (x, y, z),
            _ => return Err(FormatError::malformed(F, format!("bad vertex line {i}"))),
        };
        points.push(Point3::new(x, y, z));
    }
    PointCloud::new(points)
        .map_err(|e| FormatError::malformed(F, format!("invalid coordinates: {e}")))
}

pub fn read_cloud_file(path: &Path) -> Result<PointCloud, FormatError> {
    read_cloud(std::fs::File::open(path)?)
}
