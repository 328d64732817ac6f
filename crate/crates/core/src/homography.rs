use crate::error::GeometryError;
use crate::image::{DepthImage, ImageDims, INVALID_DEPTH};
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

const MIN_DET: f64 = 1e-9;

/// Projective 2D map between two cameras' pixel grids, unit-normalized so
/// the bottom-right entry is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 3]; 3]", into = "[[f64; 3]; 3]")]
pub struct Homography {
    m: Matrix3<f64>,
}

impl Homography {
    pub fn new(m: Matrix3<f64>) -> Result<Self, GeometryError> {
        let det = m.determinant();
        if det.abs() <= MIN_DET {
            return Err(GeometryError::SingularHomography { det });
        }
        let h33 = m[(2, 2)];
        if h33.abs() <= MIN_DET {
            return Err(GeometryError::SingularHomography { det: h33 });
        }
        Ok(Self { m: m / h33 })
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    /// Pure pixel translation (du, dv).
    pub fn translation(du: f64, dv: f64) -> Self {
        let mut m = Matrix3::identity();
        m[(0, 2)] = du;
        m[(1, 2)] = dv;
        Self { m }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn inverse(&self) -> Homography {
        // invertibility established at construction
        let inv = self.m.try_inverse().expect("validated homography");
        Homography {
            m: inv / inv[(2, 2)],
        }
    }

    /// Maps pixel coordinates through the homography.
    #[inline]
    pub fn apply(&self, u: f64, v: f64) -> (f64, f64) {
        let q = self.m * Vector3::new(u, v, 1.0);
        (q.x / q.z, q.y / q.z)
    }
}

impl TryFrom<[[f64; 3]; 3]> for Homography {
    type Error = GeometryError;
    fn try_from(rows: [[f64; 3]; 3]) -> Result<Self, Self::Error> {
        Homography::new(Matrix3::from_fn(|r, c| rows[r][c]))
    }
}

impl From<Homography> for [[f64; 3]; 3] {
    fn from(h: Homography) -> Self {
        let m = h.m;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }
}

/// Resamples `src` into a grid of `out_dims` pixels under `h` (source to
/// output pixel map), nearest-neighbor.
///
/// Output pixel (u, v) samples the source at h^-1 (u, v, 1); anything out
/// of bounds or invalid stays invalid. Range values pass through unscaled.
/// Nearest-neighbor is deliberate: interpolating across a depth step would
/// fabricate surfaces that exist in neither camera.
pub fn warp_depth(
    src: &DepthImage,
    h: &Homography,
    out_dims: ImageDims,
) -> Result<DepthImage, GeometryError> {
    let inv = h.inverse();
    let mut out = DepthImage::new_invalid(out_dims.width, out_dims.height);
    let (sw, sh) = (src.width() as i64, src.height() as i64);
    for v in 0..out_dims.height {
        for u in 0..out_dims.width {
            let (su, sv) = inv.apply(u as f64, v as f64);
            if !su.is_finite() || !sv.is_finite() {
                continue;
            }
            let si = su.round() as i64;
            let sj = sv.round() as i64;
            if si < 0 || si >= sw || sj < 0 || sj >= sh {
                continue;
            }
            let d = src.get(si as u32, sj as u32);
            if d != INVALID_DEPTH {
                out.set(u, v, d);
            }
        }
    }
    Ok(out)
}
