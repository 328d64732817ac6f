use crate::error::GeometryError;
use nalgebra::{Isometry3, Point3};

/// Ordered set of 3D points in meters, camera frame (+z along the optical
/// axis). Points deprojected from a depth image keep their source pixel
/// index so masks can be reconstructed downstream.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    points: Vec<Point3<f64>>,
    pixels: Option<Vec<u32>>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3<f64>>) -> Result<Self, GeometryError> {
        for (i, p) in points.iter().enumerate() {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(GeometryError::InvalidParameter(format!(
                    "point {i} has non-finite coordinates"
                )));
            }
        }
        Ok(Self {
            points,
            pixels: None,
        })
    }

    pub fn with_pixels(points: Vec<Point3<f64>>, pixels: Vec<u32>) -> Result<Self, GeometryError> {
        if points.len() != pixels.len() {
            return Err(GeometryError::DimensionMismatch(format!(
                "{} points vs {} pixel indices",
                points.len(),
                pixels.len()
            )));
        }
        let mut cloud = Self::new(points)?;
        cloud.pixels = Some(pixels);
        Ok(cloud)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn pixels(&self) -> Option<&[u32]> {
        self.pixels.as_deref()
    }

    /// Applies a rigid transform to every point.
    pub fn transformed(&self, iso: &Isometry3<f64>) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| iso * p).collect(),
            pixels: self.pixels.clone(),
        }
    }

    /// Keeps the points selected by `keep` (same length as the cloud),
    /// preserving order and pixel indices.
    pub fn filtered(&self, keep: &[bool]) -> PointCloud {
        debug_assert_eq!(keep.len(), self.points.len());
        let points = self
            .points
            .iter()
            .zip(keep)
            .filter(|(_, &k)| k)
            .map(|(p, _)| *p)
            .collect();
        let pixels = self.pixels.as_ref().map(|px| {
            px.iter()
                .zip(keep)
                .filter(|(_, &k)| k)
                .map(|(&i, _)| i)
                .collect()
        });
        PointCloud { points, pixels }
    }

    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.points.is_empty() {
            return None;
        }
        let mut acc = nalgebra::Vector3::zeros();
        for p in &self.points {
            acc += p.coords;
        }
        Some(Point3::from(acc / self.points.len() as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn rejects_non_finite_points() {
        assert!(PointCloud::new(vec![Point3::new(0.0, f64::NAN, 1.0)]).is_err());
    }

    #[test]
    fn filtered_keeps_pixel_alignment() {
        let cloud = PointCloud::with_pixels(
            vec![
                Point3::new(0.0, 0.0, 1.0),
                Point3::new(1.0, 0.0, 1.0),
                Point3::new(2.0, 0.0, 1.0),
            ],
            vec![10, 11, 12],
        )
        .unwrap();
        let out = cloud.filtered(&[true, false, true]);
        assert_eq!(out.len(), 2);
        assert_eq!(out.pixels().unwrap(), &[10, 12]);
        assert_eq!(out.points()[1].x, 2.0);
    }

    #[test]
    fn transformed_translates() {
        let cloud = PointCloud::new(vec![Point3::new(1.0, 2.0, 3.0)]).unwrap();
        let iso = Isometry3::translation(0.0, 0.0, 0.5);
        let out = cloud.transformed(&iso);
        assert_eq!(out.points()[0], Point3::new(1.0, 2.0, 3.5));
        let _ = Vector3::<f64>::zeros();
    }
}
