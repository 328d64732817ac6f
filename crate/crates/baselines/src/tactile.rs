use crate::error::BaselineError;
use crate::reference::ReferenceState;
use crate::rig::RigCalibration;
use crate::BaselineOutput;
use contact_core::{
    warp_depth, ContactPatch, DepthImage, PatchSource, PixelMask, PointCloud, INVALID_DEPTH,
};
use nalgebra::Point3;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Tuning for the deformation-threshold estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TactileOnlyConfig {
    /// Deformations at or below this count as sensor noise, meters. The
    /// percentile below is taken over pixels deformed past this floor;
    /// zero recovers the bare "any positive deformation" rule.
    pub deformation_floor_m: f64,
    /// Fraction of deformed pixels kept, largest deformation first.
    /// The default keeps the top 60%.
    pub keep_fraction: f64,
    /// Box half-width for smoothing the deformation field before
    /// thresholding, pixels; 0 disables. Without it, single-pixel noise
    /// straddling the percentile cut speckles the mask boundary.
    pub smoothing_radius_px: u32,
}

impl Default for TactileOnlyConfig {
    fn default() -> Self {
        Self {
            deformation_floor_m: 0.002,
            keep_fraction: 0.6,
            smoothing_radius_px: 1,
        }
    }
}

impl TactileOnlyConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if !(self.deformation_floor_m.is_finite() && self.deformation_floor_m >= 0.0) {
            return Err(BaselineError::Config(format!(
                "deformation floor must be >= 0, got {}",
                self.deformation_floor_m
            )));
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(BaselineError::Config(format!(
                "keep fraction must lie in (0, 1], got {}",
                self.keep_fraction
            )));
        }
        if self.smoothing_radius_px > 16 {
            return Err(BaselineError::Config(format!(
                "smoothing radius {} px is past any usable kernel",
                self.smoothing_radius_px
            )));
        }
        Ok(())
    }
}

/// Contact from the tactile channel alone: membrane pixels pushed toward
/// the camera relative to the reference capture, keeping the most
/// deformed fraction. Runs on the proximity-aligned grid so its mask is
/// comparable with the other estimators; 3D points are recovered through
/// the tactile camera, not the alignment plane, so they stay metric away
/// from the calibration depth.
///
/// Deformation spreads well past the true contact (the membrane drapes),
/// so this over-reports area and merges nearby contacts into one blob.
pub fn tactile_only(
    observed: &DepthImage,
    reference: &ReferenceState,
    rig: &RigCalibration,
    cfg: &TactileOnlyConfig,
) -> Result<BaselineOutput, BaselineError> {
    let start = Instant::now();
    cfg.validate()?;
    let dims = reference.proximity().dims();
    let warped = warp_depth(observed, &rig.alignment, dims)?;
    let reference_warped = reference.warped_tactile();

    let w = dims.width as usize;
    let h = dims.height as usize;
    let n = w * h;
    let obs_data = warped.data();
    let ref_data = reference_warped.data();
    let mut deformation = vec![f64::NAN; n];
    for i in 0..n {
        let o = obs_data[i];
        let r = ref_data[i];
        if o != INVALID_DEPTH && r != INVALID_DEPTH {
            // pressing moves the membrane toward the camera
            deformation[i] = f64::from(r) - f64::from(o);
        }
    }
    let field = if cfg.smoothing_radius_px == 0 {
        deformation
    } else {
        box_mean(&deformation, w, h, cfg.smoothing_radius_px as usize)
    };

    let deformed: Vec<usize> = (0..n)
        .filter(|&i| field[i].is_finite() && field[i] > cfg.deformation_floor_m)
        .collect();
    let mut mask = PixelMask::new(dims.width, dims.height, false);
    if deformed.is_empty() {
        return Ok(BaselineOutput {
            patch: ContactPatch::empty(PatchSource::TactileOnly),
            mask,
            elapsed_s: start.elapsed().as_secs_f64(),
        });
    }

    // value at the (1 - keep) quantile of the deformed pixels; everything
    // at or above it is kept, so k distinct values keep exactly the top
    // keep_fraction share
    let mut values: Vec<f64> = deformed.iter().map(|&i| field[i]).collect();
    let cut = (((1.0 - cfg.keep_fraction) * values.len() as f64).floor() as usize)
        .min(values.len() - 1);
    let (_, threshold, _) =
        values.select_nth_unstable_by(cut, |a, b| a.partial_cmp(b).expect("finite deformations"));
    let threshold = *threshold;

    let inverse_alignment = rig.alignment.inverse();
    let mut points = Vec::new();
    let mut pixels = Vec::new();
    for &i in &deformed {
        if field[i] < threshold {
            continue;
        }
        mask.bits[i] = true;
        let u = (i % w) as f64;
        let v = (i / w) as f64;
        let (su, sv) = inverse_alignment.apply(u, v);
        let p = rig
            .tactile_intrinsics
            .unproject(su.round(), sv.round(), f64::from(obs_data[i]));
        points.push(Point3::new(p.x + rig.tactile_offset_x_m, p.y, p.z));
        pixels.push(i as u32);
    }
    let cloud = PointCloud::with_pixels(points, pixels)?;
    Ok(BaselineOutput {
        patch: ContactPatch::new(cloud, PatchSource::TactileOnly),
        mask,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

/// Mean over the valid entries of the (2r+1)^2 window; NaN cells stay NaN.
fn box_mean(field: &[f64], w: usize, h: usize, r: usize) -> Vec<f64> {
    let mut out = vec![f64::NAN; field.len()];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if field[i].is_nan() {
                continue;
            }
            let mut sum = 0.0;
            let mut count = 0u32;
            for yy in y.saturating_sub(r)..=(y + r).min(h - 1) {
                for xx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                    let v = field[yy * w + xx];
                    if !v.is_nan() {
                        sum += v;
                        count += 1;
                    }
                }
            }
            out[i] = sum / f64::from(count);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use contact_core::PinholeIntrinsics;

    const W: u32 = 10;
    const H: u32 = 10;

    fn small_rig() -> RigCalibration {
        RigCalibration::shared_optics(
            PinholeIntrinsics::new(40.0, 40.0, 5.0, 5.0).unwrap(),
            0.0,
            0.3,
        )
        .unwrap()
    }

    fn flat(depth: f32) -> DepthImage {
        DepthImage::from_data(W, H, vec![depth; (W * H) as usize]).unwrap()
    }

    fn reference(rig: &RigCalibration) -> ReferenceState {
        ReferenceState::new(flat(0.3), flat(0.3), 100.0, rig).unwrap()
    }

    fn raw_config() -> TactileOnlyConfig {
        TactileOnlyConfig {
            deformation_floor_m: 0.0,
            smoothing_radius_px: 0,
            ..TactileOnlyConfig::default()
        }
    }

    #[test]
    fn hundred_distinct_deformations_keep_exactly_sixty() {
        let rig = small_rig();
        let reference = reference(&rig);
        // pixel i pressed toward the camera by (i+1) mm
        let data: Vec<f32> = (0..100).map(|i| 0.3 - (i + 1) as f32 * 1e-3).collect();
        let obs = DepthImage::from_data(W, H, data).unwrap();
        let out = tactile_only(&obs, &reference, &rig, &raw_config()).unwrap();
        assert_eq!(out.mask.count(), 60);
        assert_eq!(out.patch.len(), 60);
        // the kept pixels are the 60 most deformed, i.e. indices 40..100
        for i in 0..100u32 {
            assert_eq!(out.mask.get(i % W, i / W), i >= 40, "pixel {i}");
        }
    }

    #[test]
    fn undeformed_or_retracted_membrane_gives_empty_patch() {
        let rig = small_rig();
        let reference = reference(&rig);
        let same = tactile_only(&flat(0.3), &reference, &rig, &raw_config()).unwrap();
        assert!(same.patch.is_empty());
        assert_eq!(same.mask.count(), 0);
        // membrane farther than reference = negative deformation everywhere
        let farther = tactile_only(&flat(0.31), &reference, &rig, &raw_config()).unwrap();
        assert!(farther.patch.is_empty());
    }

    #[test]
    fn scaling_deformations_leaves_selection_unchanged() {
        let rig = small_rig();
        let reference = reference(&rig);
        let bump = |scale: f32| {
            let data: Vec<f32> = (0..(W * H) as usize)
                .map(|i| {
                    let d = ((i * 37) % 83) as f32 * 1e-4; // repeating but uneven
                    0.3 - d * scale
                })
                .collect();
            DepthImage::from_data(W, H, data).unwrap()
        };
        let a = tactile_only(&bump(1.0), &reference, &rig, &raw_config()).unwrap();
        let b = tactile_only(&bump(3.5), &reference, &rig, &raw_config()).unwrap();
        assert!(a.mask.count() > 0);
        assert_eq!(a.mask, b.mask);
    }

    #[test]
    fn floor_drops_subnoise_deformation() {
        let rig = small_rig();
        let reference = reference(&rig);
        // 1 mm haze everywhere, 5 mm press on a 3x3 block
        let mut data = vec![0.299f32; (W * H) as usize];
        for v in 4..7u32 {
            for u in 4..7u32 {
                data[(v * W + u) as usize] = 0.295;
            }
        }
        let obs = DepthImage::from_data(W, H, data).unwrap();
        let cfg = TactileOnlyConfig {
            deformation_floor_m: 0.002,
            keep_fraction: 1.0,
            smoothing_radius_px: 0,
        };
        let out = tactile_only(&obs, &reference, &rig, &cfg).unwrap();
        assert_eq!(out.mask.count(), 9);
        assert!(out.mask.get(5, 5));
        assert!(!out.mask.get(0, 0));
    }

    #[test]
    fn smoothing_absorbs_single_pixel_spikes() {
        let rig = small_rig();
        let reference = reference(&rig);
        // one isolated spike and one solid block, equal peak deformation
        let mut data = vec![0.3f32; (W * H) as usize];
        data[2] = 0.29;
        for v in 5..8u32 {
            for u in 5..8u32 {
                data[(v * W + u) as usize] = 0.29;
            }
        }
        let obs = DepthImage::from_data(W, H, data).unwrap();
        let cfg = TactileOnlyConfig {
            deformation_floor_m: 0.004,
            keep_fraction: 1.0,
            smoothing_radius_px: 1,
        };
        let out = tactile_only(&obs, &reference, &rig, &cfg).unwrap();
        // the spike averages down below 2 mm and falls under the floor;
        // the block core stays
        assert!(!out.mask.get(2, 0));
        assert!(out.mask.get(6, 6));
    }

    #[test]
    fn invalid_pixels_never_selected() {
        let rig = small_rig();
        let reference = reference(&rig);
        let mut data = vec![0.29f32; (W * H) as usize];
        data[7] = INVALID_DEPTH;
        let obs = DepthImage::from_data(W, H, data).unwrap();
        let out = tactile_only(&obs, &reference, &rig, &raw_config()).unwrap();
        assert!(!out.mask.get(7, 0));
        assert_eq!(out.mask.count(), (W * H) as usize - 1);
    }

    #[test]
    fn points_come_from_the_tactile_camera() {
        // rig with a real offset: alignment shifts pixels by
        // fx * 0.02 / 0.3 = 8/3, and points must land back at the
        // deprojection of the *source* pixel plus the offset
        let rig = RigCalibration::shared_optics(
            PinholeIntrinsics::new(40.0, 40.0, 5.0, 5.0).unwrap(),
            0.02,
            0.3,
        )
        .unwrap();
        let reference = ReferenceState::new(flat(0.3), flat(0.3), 100.0, &rig).unwrap();
        let out = tactile_only(&flat(0.29), &reference, &rig, &raw_config()).unwrap();
        assert!(!out.patch.is_empty());
        let pixels = out.patch.cloud.pixels().unwrap();
        for (p, &px) in out.patch.cloud.points().iter().zip(pixels) {
            let u = f64::from(px % W);
            let v = f64::from(px / W);
            let (su, sv) = rig.alignment.inverse().apply(u, v);
            // stored depths are f32, so compare against the same quantum
            let expect = rig
                .tactile_intrinsics
                .unproject(su.round(), sv.round(), f64::from(0.29f32));
            assert!((p.x - (expect.x + 0.02)).abs() < 1e-12);
            assert!((p.y - expect.y).abs() < 1e-12);
            assert!((p.z - 0.29).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = TactileOnlyConfig {
            keep_fraction: 0.0,
            ..TactileOnlyConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = TactileOnlyConfig {
            deformation_floor_m: -1.0,
            ..TactileOnlyConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
