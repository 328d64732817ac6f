use crate::error::BaselineError;
use crate::rig::RigCalibration;
use contact_core::{warp_depth, DepthImage};

/// Calibration capture of the free (untouched) membrane: one tactile and
/// one proximity depth frame plus the chamber pressure at capture time.
/// The tactile frame is warped onto the proximity grid once here so the
/// per-frame estimators never re-align the reference.
#[derive(Debug, Clone)]
pub struct ReferenceState {
    tactile: DepthImage,
    warped_tactile: DepthImage,
    proximity: DepthImage,
    pressure: f64,
}

impl ReferenceState {
    pub fn new(
        tactile: DepthImage,
        proximity: DepthImage,
        pressure: f64,
        rig: &RigCalibration,
    ) -> Result<Self, BaselineError> {
        if !(pressure.is_finite() && pressure > 0.0) {
            return Err(BaselineError::Config(format!(
                "reference pressure must be positive, got {pressure}"
            )));
        }
        let warped_tactile = warp_depth(&tactile, &rig.alignment, proximity.dims())?;
        Ok(Self {
            tactile,
            warped_tactile,
            proximity,
            pressure,
        })
    }

    /// Reference tactile depth in its native (tactile camera) frame.
    pub fn tactile(&self) -> &DepthImage {
        &self.tactile
    }

    /// Reference tactile depth resampled onto the proximity pixel grid.
    pub fn warped_tactile(&self) -> &DepthImage {
        &self.warped_tactile
    }

    pub fn proximity(&self) -> &DepthImage {
        &self.proximity
    }

    pub fn pressure(&self) -> f64 {
        self.pressure
    }
}
