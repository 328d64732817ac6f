use crate::error::FusionError;
use contact_core::{Homography, HsvRange, PinholeIntrinsics};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Nominal rig used when no calibration is supplied: tactile camera 20 mm
/// to the +x of the proximity camera, membrane clamped 300 mm out.
pub const DEFAULT_BASELINE_X_M: f64 = 0.020;
pub const DEFAULT_PLANE_Z_M: f64 = 0.300;

/// Everything the fusion pipeline needs to turn one frame into a contact
/// patch. Serializes to/from TOML; `Default` matches the virtual rig.
///
/// Scalar fields stay ahead of the table-valued ones so the TOML writer
/// never has to emit a bare key after a table header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionConfig {
    /// Relative depth-agreement tolerance: a pixel joins the patch when
    /// |d_p - d_t| <= tolerance * |d_p|. Must lie in (0, 1).
    pub tolerance: f64,
    /// Ablation switch for the reflection mask. Off means raw proximity
    /// depth goes straight into the intersection.
    pub use_reflection_mask: bool,
    /// Statistical outlier filter: neighborhood size and cutoff in
    /// standard deviations of the mean-neighbor-distance population.
    pub filter_k_neighbors: usize,
    pub filter_std_ratio: f64,
    /// Maps tactile pixels onto the proximity pixel grid.
    pub homography: Homography,
    /// HSV region discarded from the proximity image as internal membrane
    /// reflection. The default band wraps through red: it covers both the
    /// purple membrane glow and the saturated orange glints while leaving
    /// green object hues alone.
    pub reflection_hsv: HsvRange,
    /// Proximity camera model used for deprojection.
    pub intrinsics: PinholeIntrinsics,
}

impl Default for FusionConfig {
    fn default() -> Self {
        let k = PinholeIntrinsics::default_vga();
        Self {
            tolerance: 0.03,
            use_reflection_mask: true,
            filter_k_neighbors: 20,
            filter_std_ratio: 2.0,
            homography: rig_homography(&k, DEFAULT_BASELINE_X_M, DEFAULT_PLANE_Z_M),
            reflection_hsv: HsvRange {
                hue_min_deg: 200.0,
                hue_max_deg: 60.0,
                sat_min: 0.0,
                sat_max: 1.0,
                val_min: 0.0,
                val_max: 1.0,
            },
            intrinsics: k,
        }
    }
}

/// Alignment map for two identical pinhole cameras separated by a pure +x
/// baseline, both viewing the plane z = plane_z: a pixel translation of
/// fx * baseline / plane_z. Callers guarantee plane_z > 0.
fn rig_homography(k: &PinholeIntrinsics, baseline_x_m: f64, plane_z_m: f64) -> Homography {
    Homography::translation(k.fx * baseline_x_m / plane_z_m, 0.0)
}

impl FusionConfig {
    /// Default thresholds with the alignment homography recomputed for a
    /// specific rig (intrinsics, tactile baseline, nominal plane depth).
    pub fn for_rig(
        intrinsics: PinholeIntrinsics,
        baseline_x_m: f64,
        plane_z_m: f64,
    ) -> Result<Self, FusionError> {
        if !(plane_z_m > 0.0) || !plane_z_m.is_finite() || !baseline_x_m.is_finite() {
            return Err(FusionError::Config(format!(
                "rig wants finite baseline and positive plane depth, got {baseline_x_m} / {plane_z_m}"
            )));
        }
        let cfg = Self {
            homography: rig_homography(&intrinsics, baseline_x_m, plane_z_m),
            intrinsics,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), FusionError> {
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(FusionError::Config(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        if self.filter_k_neighbors == 0 {
            return Err(FusionError::Config("filter_k_neighbors must be >= 1".into()));
        }
        if !(self.filter_std_ratio > 0.0) || !self.filter_std_ratio.is_finite() {
            return Err(FusionError::Config(format!(
                "filter_std_ratio must be positive, got {}",
                self.filter_std_ratio
            )));
        }
        let h = &self.reflection_hsv;
        for (name, deg) in [("hue_min_deg", h.hue_min_deg), ("hue_max_deg", h.hue_max_deg)] {
            if !(0.0..360.0).contains(&deg) {
                return Err(FusionError::Config(format!(
                    "{name} must lie in [0, 360), got {deg}"
                )));
            }
        }
        // hue_min > hue_max legitimately wraps through 0; sat/val do not
        for (name, lo, hi) in [
            ("saturation", h.sat_min, h.sat_max),
            ("value", h.val_min, h.val_max),
        ] {
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(FusionError::Config(format!(
                    "{name} range [{lo}, {hi}] must be ordered within [0, 1]"
                )));
            }
        }
        if !(self.intrinsics.fx > 0.0 && self.intrinsics.fy > 0.0) {
            return Err(FusionError::Config(format!(
                "focal lengths must be positive, got fx={}, fy={}",
                self.intrinsics.fx, self.intrinsics.fy
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(s: &str) -> Result<Self, FusionError> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, FusionError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String, FusionError> {
        toml::to_string_pretty(self).map_err(|e| FusionError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use contact_core::color::hsv_to_rgb;

    #[test]
    fn default_validates_and_round_trips_via_toml() {
        let cfg = FusionConfig::default();
        cfg.validate().unwrap();
        let text = cfg.to_toml_string().unwrap();
        let back = FusionConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn default_homography_shifts_by_baseline_over_plane() {
        let cfg = FusionConfig::default();
        let (u, v) = cfg.homography.apply(100.0, 50.0);
        // 400 * 0.020 / 0.300 = 26.67 px along +u only
        assert!((u - 100.0 - 400.0 * 0.020 / 0.300).abs() < 1e-12);
        assert!((v - 50.0).abs() < 1e-12);
    }

    #[test]
    fn default_band_excludes_membrane_and_glint_hues_not_object() {
        let band = FusionConfig::default().reflection_hsv;
        assert!(band.contains(hsv_to_rgb(270.0, 0.55, 0.45))); // membrane
        assert!(band.contains(hsv_to_rgb(30.0, 0.85, 0.85))); // reflection glint
        assert!(band.contains([20, 20, 20])); // dark chamber wall
        assert!(!band.contains(hsv_to_rgb(120.0, 0.65, 0.55))); // object
    }

    #[test]
    fn rejects_out_of_range_fields() {
        let mut cfg = FusionConfig::default();
        cfg.tolerance = 0.0;
        assert!(cfg.validate().is_err());
        cfg.tolerance = 1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = FusionConfig::default();
        cfg.filter_k_neighbors = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = FusionConfig::default();
        cfg.reflection_hsv.sat_min = 0.9;
        cfg.reflection_hsv.sat_max = 0.1;
        assert!(cfg.validate().is_err());

        let mut cfg = FusionConfig::default();
        cfg.reflection_hsv.hue_max_deg = 360.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn wrapping_hue_band_is_legal() {
        let mut cfg = FusionConfig::default();
        cfg.reflection_hsv.hue_min_deg = 350.0;
        cfg.reflection_hsv.hue_max_deg = 10.0;
        cfg.validate().unwrap();
    }

    #[test]
    fn for_rig_rejects_degenerate_plane() {
        let k = PinholeIntrinsics::default_vga();
        assert!(FusionConfig::for_rig(k, 0.02, 0.0).is_err());
        assert!(FusionConfig::for_rig(k, f64::NAN, 0.3).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "tolerance = 0.05\nbogus_knob = 3\n";
        assert!(FusionConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let cfg = FusionConfig::from_toml_str("tolerance = 0.05\n").unwrap();
        assert_eq!(cfg.tolerance, 0.05);
        assert_eq!(cfg.filter_k_neighbors, 20);
        assert_eq!(cfg.intrinsics, PinholeIntrinsics::default_vga());
    }
}
