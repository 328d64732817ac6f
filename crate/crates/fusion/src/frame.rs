use crate::error::FusionError;
use contact_core::{DepthImage, GeometryError, ImageDims, RgbImage};

/// One synchronized capture: proximity depth + RGB from the outer camera,
/// tactile depth from the inner camera (still in its own pixel grid until
/// [`crate::align_frames`] runs). A single timestamp covers all three
/// images because the cameras are sampled together.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBundle {
    pub proximity_depth: DepthImage,
    pub tactile_depth: DepthImage,
    pub rgb: RgbImage,
    /// Seconds from sequence start.
    pub timestamp: f64,
}

impl FrameBundle {
    pub fn new(
        proximity_depth: DepthImage,
        tactile_depth: DepthImage,
        rgb: RgbImage,
        timestamp: f64,
    ) -> Result<Self, FusionError> {
        let (w, h) = (proximity_depth.width(), proximity_depth.height());
        for (name, iw, ih) in [
            ("tactile depth", tactile_depth.width(), tactile_depth.height()),
            ("rgb", rgb.width(), rgb.height()),
        ] {
            if (iw, ih) != (w, h) {
                return Err(GeometryError::DimensionMismatch(format!(
                    "{name} is {iw}x{ih} but proximity depth is {w}x{h}"
                ))
                .into());
            }
        }
        Ok(Self {
            proximity_depth,
            tactile_depth,
            rgb,
            timestamp,
        })
    }

    pub fn dims(&self) -> ImageDims {
        ImageDims {
            width: self.proximity_depth.width(),
            height: self.proximity_depth.height(),
        }
    }
}
