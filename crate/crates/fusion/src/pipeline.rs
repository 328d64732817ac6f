use crate::config::FusionConfig;
use crate::error::FusionError;
use crate::frame::FrameBundle;
use contact_core::{
    deproject, statistical_outlier_filter, warp_depth, ContactPatch, DepthImage, GeometryError,
    PatchSource, PixelMask, RgbImage, INVALID_DEPTH,
};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Depth-agreement rule for a single pixel pair: both samples valid and
/// |d_p - d_t| <= tolerance * |d_p|. This is the entire fusion criterion;
/// everything else in the pipeline just decides which pixels it sees.
#[inline]
pub fn depth_consistent(d_p: f32, d_t: f32, tolerance: f64) -> bool {
    d_p != INVALID_DEPTH
        && d_t != INVALID_DEPTH
        && (f64::from(d_p) - f64::from(d_t)).abs() <= tolerance * f64::from(d_p).abs()
}

/// Half-width of the agreement band at proximity depth `d_p` in meters.
/// At the default tolerance the working range 0.200-0.267 m maps to
/// 6-8 mm, which is how far apart the two sensors may read before a pixel
/// stops counting as shared surface.
#[inline]
pub fn tolerance_band_m(d_p: f64, tolerance: f64) -> f64 {
    tolerance * d_p.abs()
}

/// Warps the tactile depth into the proximity pixel grid; the proximity
/// images pass through untouched (RGB-to-depth alignment within the
/// proximity camera is the driver's job, and the virtual rig shares
/// intrinsics anyway).
pub fn align_frames(f: &FrameBundle, cfg: &FusionConfig) -> Result<FrameBundle, FusionError> {
    let tactile = warp_depth(&f.tactile_depth, &cfg.homography, f.dims())?;
    Ok(FrameBundle {
        proximity_depth: f.proximity_depth.clone(),
        tactile_depth: tactile,
        rgb: f.rgb.clone(),
        timestamp: f.timestamp,
    })
}

/// Keep-mask over proximity pixels: false wherever the RGB sample falls
/// inside the configured reflection color range. May exclude everything
/// (a frame of pure membrane glow) or nothing.
pub fn proximity_mask(rgb: &RgbImage, cfg: &FusionConfig) -> PixelMask {
    let mut mask = PixelMask::new(rgb.width(), rgb.height(), true);
    for v in 0..rgb.height() {
        for u in 0..rgb.width() {
            if cfg.reflection_hsv.contains(rgb.get(u, v)) {
                mask.set(u, v, false);
            }
        }
    }
    mask
}

/// Pixel-wise intersection of the two depth maps under the agreement rule.
/// The images must already be aligned and equally sized.
pub fn intersect(
    d_p: &DepthImage,
    d_t: &DepthImage,
    tolerance: f64,
) -> Result<PixelMask, FusionError> {
    if (d_p.width(), d_p.height()) != (d_t.width(), d_t.height()) {
        return Err(GeometryError::DimensionMismatch(format!(
            "intersect: {}x{} vs {}x{}",
            d_p.width(),
            d_p.height(),
            d_t.width(),
            d_t.height()
        ))
        .into());
    }
    let mut mask = PixelMask::new(d_p.width(), d_p.height(), false);
    for (bit, (&dp, &dt)) in mask.bits.iter_mut().zip(d_p.data().iter().zip(d_t.data())) {
        *bit = depth_consistent(dp, dt, tolerance);
    }
    Ok(mask)
}

/// Wall time per stage in seconds. `total_s` is measured independently,
/// not summed, so it also covers the glue between stages.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub align_s: f64,
    pub reflection_mask_s: f64,
    pub intersect_s: f64,
    pub deproject_s: f64,
    pub outlier_filter_s: f64,
    pub total_s: f64,
}

/// Everything the pipeline produces for one frame.
#[derive(Debug, Clone)]
pub struct FusionEstimate {
    pub patch: ContactPatch,
    /// Pixels whose deprojected points survived the outlier filter; always
    /// a subset of the intersection mask.
    pub mask: PixelMask,
    pub timings: StageTimings,
}

/// Full per-frame pipeline: align, drop reflection-colored pixels, gate on
/// depth agreement, deproject what remains of the proximity map, and trim
/// statistical outliers. An empty patch is a normal result meaning "no
/// contact seen".
pub fn estimate_contact_patch(
    f: &FrameBundle,
    cfg: &FusionConfig,
) -> Result<FusionEstimate, FusionError> {
    cfg.validate()?;
    let start = Instant::now();

    let t = Instant::now();
    let aligned = align_frames(f, cfg)?;
    let align_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let masked_dp = if cfg.use_reflection_mask {
        let keep = proximity_mask(&aligned.rgb, cfg);
        aligned.proximity_depth.masked(&keep)?
    } else {
        aligned.proximity_depth.clone()
    };
    let reflection_mask_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let agreement = intersect(&masked_dp, &aligned.tactile_depth, cfg.tolerance)?;
    let gated_dp = masked_dp.masked(&agreement)?;
    let intersect_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let cloud = deproject(&gated_dp, &cfg.intrinsics)?;
    let deproject_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let outcome = statistical_outlier_filter(&cloud, cfg.filter_k_neighbors, cfg.filter_std_ratio)?;
    let outlier_filter_s = t.elapsed().as_secs_f64();

    let mut mask = PixelMask::new(gated_dp.width(), gated_dp.height(), false);
    if let Some(pixels) = outcome.cloud.pixels() {
        for &p in pixels {
            mask.bits[p as usize] = true;
        }
    }

    Ok(FusionEstimate {
        patch: ContactPatch::new(outcome.cloud, PatchSource::Fusion),
        mask,
        timings: StageTimings {
            align_s,
            reflection_mask_s,
            intersect_s,
            deproject_s,
            outlier_filter_s,
            total_s: start.elapsed().as_secs_f64(),
        },
    })
}
