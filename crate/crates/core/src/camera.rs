use crate::cloud::PointCloud;
use crate::error::GeometryError;
use crate::image::DepthImage;
use nalgebra::Point3;
use serde::{Deserialize, Serialize};

/// Pinhole camera: focal lengths and principal point in pixels, no
/// distortion. The virtual rig defaults to fx = fy = 400, cx = 320,
/// cy = 240, which covers the full membrane at working distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinholeIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl PinholeIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        Ok(Self { fx, fy, cx, cy })
    }

    /// Default virtual intrinsics for 640x480 rendering.
    pub fn default_vga() -> Self {
        Self {
            fx: 400.0,
            fy: 400.0,
            cx: 320.0,
            cy: 240.0,
        }
    }

    /// Checks the principal point lies inside an image of the given size.
    pub fn validate_for(&self, width: u32, height: u32) -> Result<(), GeometryError> {
        if self.cx < 0.0 || self.cx >= width as f64 || self.cy < 0.0 || self.cy >= height as f64 {
            return Err(GeometryError::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, width, height
            )));
        }
        Ok(())
    }

    /// Back-projects pixel (u, v) with z-depth `z` to a camera-frame point.
    #[inline]
    pub fn unproject(&self, u: f64, v: f64, z: f64) -> Point3<f64> {
        Point3::new((u - self.cx) * z / self.fx, (v - self.cy) * z / self.fy, z)
    }

    /// Projects a camera-frame point to pixel coordinates. Returns `None`
    /// for points at or behind the camera plane.
    #[inline]
    pub fn project(&self, p: &Point3<f64>) -> Option<(f64, f64)> {
        if p.z <= 0.0 {
            return None;
        }
        Some((
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        ))
    }
}

/// Back-projects every valid pixel of `depth` to a 3D point in the camera
/// frame, in row-major pixel order. Invalid pixels produce no point.
pub fn deproject(depth: &DepthImage, k: &PinholeIntrinsics) -> Result<PointCloud, GeometryError> {
    k.validate_for(depth.width(), depth.height())?;
    let mut points = Vec::with_capacity(depth.valid_count());
    let mut pixels = Vec::with_capacity(points.capacity());
    for v in 0..depth.height() {
        for u in 0..depth.width() {
            let z = depth.get(u, v);
            if z != crate::image::INVALID_DEPTH {
                points.push(k.unproject(u as f64, v as f64, z as f64));
                pixels.push(depth.index(u, v) as u32);
            }
        }
    }
    PointCloud::with_pixels(points, pixels)
}
