use crate::error::BaselineError;
use contact_core::{Homography, PinholeIntrinsics};
use serde::{Deserialize, Serialize};

/// Camera geometry the estimators share: both pinhole models, the tactile
/// camera's offset along +x in the proximity frame, and the homography
/// that maps tactile pixels onto the proximity pixel grid.
///
/// The homography is a plane-induced approximation (exact only at the
/// calibration depth), so estimators that need metric positions go back
/// through the tactile camera: warped pixel -> source pixel -> unproject
/// with the tactile intrinsics -> shift by the offset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RigCalibration {
    pub proximity_intrinsics: PinholeIntrinsics,
    pub tactile_intrinsics: PinholeIntrinsics,
    /// Tactile camera position along +x, meters, proximity frame.
    pub tactile_offset_x_m: f64,
    /// Tactile pixel -> proximity pixel map (source to output).
    pub alignment: Homography,
}

impl RigCalibration {
    /// Rig with identical optics in both positions and the alignment
    /// homography induced by a fronto-parallel plane at `plane_z_m`:
    /// a pure pixel translation of fx * offset / plane_z.
    pub fn shared_optics(
        intrinsics: PinholeIntrinsics,
        tactile_offset_x_m: f64,
        plane_z_m: f64,
    ) -> Result<Self, BaselineError> {
        if !tactile_offset_x_m.is_finite() {
            return Err(BaselineError::Config(format!(
                "tactile offset must be finite, got {tactile_offset_x_m}"
            )));
        }
        if !(plane_z_m.is_finite() && plane_z_m > 0.0) {
            return Err(BaselineError::Config(format!(
                "alignment plane depth must be positive, got {plane_z_m}"
            )));
        }
        let shift = intrinsics.fx * tactile_offset_x_m / plane_z_m;
        Ok(Self {
            proximity_intrinsics: intrinsics,
            tactile_intrinsics: intrinsics,
            tactile_offset_x_m,
            alignment: Homography::translation(shift, 0.0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shared_optics_shift_matches_parallax() {
        let rig =
            RigCalibration::shared_optics(PinholeIntrinsics::default_vga(), 0.020, 0.300).unwrap();
        let (u, v) = rig.alignment.apply(100.0, 50.0);
        // fx = 400: 400 * 0.020 / 0.300 = 26.666...
        assert!((u - 126.6666).abs() < 1e-3);
        assert_eq!(v, 50.0);
    }

    #[test]
    fn rejects_bad_plane() {
        assert!(
            RigCalibration::shared_optics(PinholeIntrinsics::default_vga(), 0.02, 0.0).is_err()
        );
        assert!(RigCalibration::shared_optics(
            PinholeIntrinsics::default_vga(),
            f64::NAN,
            0.3
        )
        .is_err());
    }
}
