use crate::error::SimError;
use crate::membrane::MembraneState;
use crate::obstacle::RigidObstacle;
use contact_core::color::hsv_to_rgb;
use contact_core::{DepthImage, PinholeIntrinsics, RgbImage};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

/// Hue painted where the camera sees bare membrane.
pub const MEMBRANE_HUE_DEG: f64 = 270.0;
/// Hue painted where the object shows through the membrane.
pub const OBJECT_HUE_DEG: f64 = 120.0;
/// Hue of specular reflection artifacts.
pub const BLOB_HUE_DEG: f64 = 30.0;

/// Virtual sensor rig: proximity camera at the origin, tactile camera
/// shifted along +x, both looking straight up the +z axis.
#[derive(Debug, Clone, Copy)]
pub struct RenderConfig {
    pub width: u32,
    pub height: u32,
    pub intrinsics: PinholeIntrinsics,
    /// Tactile camera offset along +x, meters.
    pub tactile_offset_x: f64,
    /// Proximity returns reach at most this far beyond the membrane.
    pub range_beyond_membrane_m: f64,
    /// Std-dev of tactile depth noise, meters.
    pub tactile_noise_sigma_m: f64,
    /// Ray-march step, meters.
    pub march_step_m: f64,
    /// Number of specular reflection blobs burned into a press frame.
    pub blob_count: usize,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            width: 640,
            height: 480,
            intrinsics: PinholeIntrinsics::default_vga(),
            tactile_offset_x: 0.020,
            range_beyond_membrane_m: 0.100,
            tactile_noise_sigma_m: 5e-4,
            march_step_m: 1e-3,
            blob_count: 2,
        }
    }
}

/// One synthetic capture: both depth streams plus the color stream.
#[derive(Debug, Clone)]
pub struct SensorFrames {
    pub proximity_depth: DepthImage,
    pub tactile_depth: DepthImage,
    pub rgb: RgbImage,
}

/// First crossing of the membrane heightfield along the ray
/// (ox + s·dx, oy + s·dy, s); returns s, which equals the hit's z.
fn march_heightfield(
    state: &MembraneState,
    ox: f64,
    oy: f64,
    dx: f64,
    dy: f64,
    s_lo: f64,
    s_hi: f64,
    step: f64,
) -> Option<f64> {
    let g = &state.grid;
    let gap = |s: f64| -> Option<f64> {
        g.interpolate(&state.z, ox + s * dx, oy + s * dy).map(|h| s - h)
    };
    let mut prev_s = s_lo;
    let mut prev_g = gap(prev_s);
    let mut s = s_lo + step;
    while s <= s_hi {
        let cur = gap(s);
        if let (Some(a), Some(b)) = (prev_g, cur) {
            if a < 0.0 && b >= 0.0 {
                // bisect the bracket down to sub-micron
                let (mut lo, mut hi) = (prev_s, s);
                for _ in 0..30 {
                    let mid = 0.5 * (lo + hi);
                    match gap(mid) {
                        Some(gm) if gm >= 0.0 => hi = mid,
                        Some(_) => lo = mid,
                        None => break,
                    }
                }
                return Some(hi);
            }
        }
        prev_s = s;
        prev_g = cur;
        s += step;
    }
    None
}

/// First entry into the rigid solid {z ≥ underside(x, y)} along the same
/// ray family. Boolean bisection handles the vertical side walls, where
/// the entry height jumps discontinuously.
fn march_solid(
    obstacle: &RigidObstacle,
    ox: f64,
    oy: f64,
    dx: f64,
    dy: f64,
    s_lo: f64,
    s_hi: f64,
    step: f64,
) -> Option<f64> {
    let inside = |s: f64| -> bool {
        obstacle
            .underside(ox + s * dx, oy + s * dy)
            .is_some_and(|h| s >= h)
    };
    let mut prev_s = s_lo;
    if inside(prev_s) {
        return Some(prev_s);
    }
    let mut s = s_lo + step;
    while s <= s_hi {
        if inside(s) {
            let (mut lo, mut hi) = (prev_s, s);
            for _ in 0..30 {
                let mid = 0.5 * (lo + hi);
                if inside(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Some(hi);
        }
        prev_s = s;
        s += step;
    }
    None
}

fn z_bracket(state: &MembraneState) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for z in &state.z {
        lo = lo.min(*z);
        hi = hi.max(*z);
    }
    (lo - 2e-3, hi + 2e-3)
}

/// Renders the membrane depth seen from a camera at (origin_x, 0, 0).
/// Pixels whose ray misses the membrane stay invalid.
pub fn render_membrane_depth(
    state: &MembraneState,
    cfg: &RenderConfig,
    origin_x: f64,
) -> Result<DepthImage, SimError> {
    cfg.intrinsics.validate_for(cfg.width, cfg.height)?;
    let (s_lo, s_hi) = z_bracket(state);
    let k = &cfg.intrinsics;
    let mut depth = DepthImage::new_invalid(cfg.width, cfg.height);
    for v in 0..cfg.height {
        let dy = (v as f64 - k.cy) / k.fy;
        for u in 0..cfg.width {
            let dx = (u as f64 - k.cx) / k.fx;
            if let Some(s) =
                march_heightfield(state, origin_x, 0.0, dx, dy, s_lo, s_hi, cfg.march_step_m)
            {
                depth.set(u, v, s as f32);
            }
        }
    }
    Ok(depth)
}

/// Renders one full capture of a (possibly pressed) membrane.
///
/// The proximity channel sees through the translucent membrane: the
/// object is reported while it sits within `range_beyond_membrane_m` of
/// the surface, else the weak membrane reflection itself is returned.
/// The tactile channel images the membrane surface only, with Gaussian
/// depth noise. Press frames additionally carry specular blob artifacts:
/// saturated orange patches whose proximity depths read a few
/// millimeters closer than the membrane.
pub fn render_frames(
    state: &MembraneState,
    obstacle: Option<&RigidObstacle>,
    cfg: &RenderConfig,
    seed: u64,
) -> Result<SensorFrames, SimError> {
    cfg.intrinsics.validate_for(cfg.width, cfg.height)?;
    let k = cfg.intrinsics;
    let (s_lo, s_hi) = z_bracket(state);
    let solid_hi = s_hi + cfg.range_beyond_membrane_m + 2e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, cfg.tactile_noise_sigma_m)
        .map_err(|e| SimError::Model(format!("bad noise sigma: {e}")))?;

    let mut proximity = DepthImage::new_invalid(cfg.width, cfg.height);
    let mut tactile = DepthImage::new_invalid(cfg.width, cfg.height);
    let mut rgb = RgbImage::new(cfg.width, cfg.height);
    // true where the object shows through (excluded from blob placement)
    let mut object_visible = vec![false; (cfg.width * cfg.height) as usize];

    for v in 0..cfg.height {
        let dy = (v as f64 - k.cy) / k.fy;
        for u in 0..cfg.width {
            let dx = (u as f64 - k.cx) / k.fx;
            let mem = march_heightfield(state, 0.0, 0.0, dx, dy, s_lo, s_hi, cfg.march_step_m);
            let (hue, sat, val);
            match mem {
                Some(s_mem) => {
                    let hit_obj = obstacle.and_then(|o| {
                        march_solid(o, 0.0, 0.0, dx, dy, s_lo, solid_hi, cfg.march_step_m)
                            .filter(|s| *s <= s_mem + cfg.range_beyond_membrane_m)
                    });
                    match hit_obj {
                        Some(s_obj) => {
                            proximity.set(u, v, s_obj as f32);
                            object_visible[(v * cfg.width + u) as usize] = true;
                            hue = OBJECT_HUE_DEG + rng.random_range(-8.0..8.0);
                            sat = rng.random_range(0.55..0.75);
                            val = rng.random_range(0.45..0.65);
                        }
                        None => {
                            proximity.set(u, v, s_mem as f32);
                            hue = MEMBRANE_HUE_DEG + rng.random_range(-8.0..8.0);
                            sat = rng.random_range(0.45..0.65);
                            val = rng.random_range(0.35..0.55);
                        }
                    }
                }
                None => {
                    // chamber wall outside the clamp: dark, desaturated
                    hue = 0.0;
                    sat = 0.0;
                    val = rng.random_range(0.05..0.12);
                }
            }
            rgb.set(u, v, hsv_to_rgb(hue, sat, val));
        }
    }

    // tactile camera from its own viewpoint, with sensor noise
    for v in 0..cfg.height {
        let dy = (v as f64 - k.cy) / k.fy;
        for u in 0..cfg.width {
            let dx = (u as f64 - k.cx) / k.fx;
            if let Some(s) = march_heightfield(
                state,
                cfg.tactile_offset_x,
                0.0,
                dx,
                dy,
                s_lo,
                s_hi,
                cfg.march_step_m,
            ) {
                tactile.set(u, v, (s + noise.sample(&mut rng)) as f32);
            }
        }
    }

    if obstacle.is_some() {
        burn_reflection_blobs(&mut proximity, &mut rgb, &object_visible, cfg, &mut rng);
    }

    Ok(SensorFrames {
        proximity_depth: proximity,
        tactile_depth: tactile,
        rgb,
    })
}

/// Rasterizes a grid-node contact mask into the proximity camera's pixel
/// space: a pixel is ground-truth contact when its membrane hit lands in
/// the grid cell of a contacting node. Pixels that miss the membrane are
/// never contact.
pub fn rasterize_contact_mask(
    state: &MembraneState,
    mask: &crate::grid::GridMask,
    cfg: &RenderConfig,
) -> Result<contact_core::PixelMask, SimError> {
    cfg.intrinsics.validate_for(cfg.width, cfg.height)?;
    if (mask.nx, mask.ny) != (state.grid.nx, state.grid.ny) {
        return Err(SimError::Model("contact mask does not match the grid".into()));
    }
    let k = &cfg.intrinsics;
    let (s_lo, s_hi) = z_bracket(state);
    let mut px = contact_core::PixelMask::new(cfg.width, cfg.height, false);
    for v in 0..cfg.height {
        let dy = (v as f64 - k.cy) / k.fy;
        for u in 0..cfg.width {
            let dx = (u as f64 - k.cx) / k.fx;
            let hit = march_heightfield(state, 0.0, 0.0, dx, dy, s_lo, s_hi, cfg.march_step_m);
            if let Some(s) = hit {
                if let Some((i, j)) = state.grid.nearest_node(s * dx, s * dy) {
                    if mask.get(i, j) {
                        px.set(u, v, true);
                    }
                }
            }
        }
    }
    Ok(px)
}

/// Stamp elliptical specular artifacts onto the press frame. Blobs avoid
/// the object silhouette (placement is rejection-sampled) so the color
/// cue stays unambiguous; their proximity depths read slightly near, the
/// classic multipath signature.
fn burn_reflection_blobs(
    proximity: &mut DepthImage,
    rgb: &mut RgbImage,
    object_visible: &[bool],
    cfg: &RenderConfig,
    rng: &mut ChaCha8Rng,
) {
    let w = cfg.width as i64;
    let h = cfg.height as i64;
    let mut blobbed = vec![false; (cfg.width * cfg.height) as usize];
    let mut placed = 0;
    let mut attempts = 0;
    while placed < cfg.blob_count && attempts < 50 * cfg.blob_count.max(1) {
        attempts += 1;
        let a = rng.random_range(8.0..25.0f64);
        let b = rng.random_range(8.0..25.0f64);
        let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let cx = rng.random_range(40.0..(cfg.width as f64 - 40.0));
        let cy = rng.random_range(40.0..(cfg.height as f64 - 40.0));
        let near_shift = rng.random_range(0.002..0.008);

        let (st, ct) = theta.sin_cos();
        let r = a.max(b).ceil() as i64 + 1;
        let inside_blob = |u: i64, v: i64| -> bool {
            let du = u as f64 - cx;
            let dv = v as f64 - cy;
            let lu = ct * du + st * dv;
            let lv = -st * du + ct * dv;
            (lu / a).powi(2) + (lv / b).powi(2) <= 1.0
        };

        // reject placements touching the object silhouette or leaving
        // the valid membrane region
        let mut clean = true;
        'scan: for v in (cy as i64 - r).max(0)..=(cy as i64 + r).min(h - 1) {
            for u in (cx as i64 - r).max(0)..=(cx as i64 + r).min(w - 1) {
                if !inside_blob(u, v) {
                    continue;
                }
                let idx = (v * w + u) as usize;
                if object_visible[idx] || blobbed[idx] || !proximity.is_valid(u as u32, v as u32)
                {
                    clean = false;
                    break 'scan;
                }
            }
        }
        if !clean {
            continue;
        }

        for v in (cy as i64 - r).max(0)..=(cy as i64 + r).min(h - 1) {
            for u in (cx as i64 - r).max(0)..=(cx as i64 + r).min(w - 1) {
                if !inside_blob(u, v) {
                    continue;
                }
                let (uu, vv) = (u as u32, v as u32);
                blobbed[(v * w + u) as usize] = true;
                let d = proximity.get(uu, vv);
                proximity.set(uu, vv, d - near_shift as f32);
                let hue = BLOB_HUE_DEG + rng.random_range(-6.0..6.0);
                let sat = rng.random_range(0.75..0.95);
                let val = rng.random_range(0.75..0.95);
                rgb.set(uu, vv, hsv_to_rgb(hue, sat, val));
            }
        }
        placed += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::MembraneGrid;
    use crate::membrane::{calibrate_pressure, inflate_membrane, TensionField};
    use crate::obstacle::{ObjectKind, ObjectPose};
    use crate::press::press_object;
    use contact_core::color::rgb_to_hsv;
    use contact_core::{deproject, PointCloud};

    fn inflated() -> MembraneState {
        let g = MembraneGrid::default();
        let tension = TensionField::default();
        let p = calibrate_pressure(&g, &tension, 0.3, 0.014).unwrap();
        inflate_membrane(&g, &tension, p, 0.3).unwrap()
    }

    #[test]
    fn rendered_depth_matches_surface_heights() {
        let free = inflated();
        let cfg = RenderConfig::default();
        let depth = render_membrane_depth(&free, &cfg, 0.0).unwrap();
        assert!(depth.valid_count() > 100_000);
        let cloud: PointCloud = deproject(&depth, &cfg.intrinsics).unwrap();
        // every deprojected point must lie on the membrane surface
        let g = &free.grid;
        let mut worst = 0.0f64;
        for p in cloud.points() {
            if let Some(h) = g.interpolate(&free.z, p.x, p.y) {
                worst = worst.max((p.z - h).abs());
            }
        }
        assert!(worst < 2e-4, "surface deviation {worst}");
    }

    #[test]
    fn center_pixel_reads_the_apex() {
        let free = inflated();
        let cfg = RenderConfig::default();
        let depth = render_membrane_depth(&free, &cfg, 0.0).unwrap();
        let d = depth.get(320, 240) as f64;
        assert!((d - free.apex()).abs() < 1e-4, "center depth {d}");
    }

    #[test]
    fn frames_are_deterministic_per_seed() {
        let free = inflated();
        let obstacle =
            RigidObstacle::lowered_onto(ObjectKind::Cube, ObjectPose::default(), &free, 0.006)
                .unwrap();
        let (pressed, _, _) = press_object(&free, &obstacle).unwrap();
        let cfg = RenderConfig::default();
        let a = render_frames(&pressed, Some(&obstacle), &cfg, 42).unwrap();
        let b = render_frames(&pressed, Some(&obstacle), &cfg, 42).unwrap();
        let c = render_frames(&pressed, Some(&obstacle), &cfg, 43).unwrap();
        assert_eq!(a.proximity_depth.data(), b.proximity_depth.data());
        assert_eq!(a.tactile_depth.data(), b.tactile_depth.data());
        assert_eq!(a.rgb.data(), b.rgb.data());
        assert_ne!(a.tactile_depth.data(), c.tactile_depth.data());
    }

    #[test]
    fn contact_pixels_agree_across_channels_and_fringe_does_not() {
        let free = inflated();
        let obstacle =
            RigidObstacle::lowered_onto(ObjectKind::Cube, ObjectPose::default(), &free, 0.008)
                .unwrap();
        let (pressed, oracle, _) = press_object(&free, &obstacle).unwrap();
        let frames = render_frames(&pressed, Some(&obstacle), &RenderConfig::default(), 7).unwrap();
        let k = PinholeIntrinsics::default_vga();

        // project a few contact points: proximity must read the shared
        // surface depth there
        let mut checked = 0;
        for p in oracle.cloud.points().iter().step_by(17) {
            if let Some((u, v)) = k.project(p) {
                let (ui, vi) = (u.round() as u32, v.round() as u32);
                let d = frames.proximity_depth.get(ui, vi) as f64;
                if d > 0.0 {
                    assert!((d - p.z).abs() < 1.5e-3, "contact depth off by {}", d - p.z);
                    checked += 1;
                }
            }
        }
        assert!(checked > 10);

        // the cube face floats above the membrane outside the contact
        // plateau only at its rim; interior face pixels all agree
        let face = obstacle.base_height;
        let center = frames.proximity_depth.get(320, 240) as f64;
        assert!((center - face).abs() < 1e-4);
    }

    #[test]
    fn blobs_read_near_and_wear_warm_colors() {
        let free = inflated();
        let obstacle =
            RigidObstacle::lowered_onto(ObjectKind::Cube, ObjectPose::default(), &free, 0.006)
                .unwrap();
        let (pressed, _, _) = press_object(&free, &obstacle).unwrap();
        let cfg = RenderConfig::default();
        let clean = render_frames(&pressed, None, &cfg, 99).unwrap();
        let dirty = render_frames(&pressed, Some(&obstacle), &cfg, 99).unwrap();

        let mut blob_pixels = 0;
        for v in 0..cfg.height {
            for u in 0..cfg.width {
                let (h, s, _) = rgb_to_hsv(dirty.rgb.get(u, v));
                if (h - BLOB_HUE_DEG).abs() <= 10.0 && s > 0.6 {
                    blob_pixels += 1;
                    let d_dirty = dirty.proximity_depth.get(u, v);
                    let d_clean = clean.proximity_depth.get(u, v);
                    // blobs only stamp membrane-valid areas; both renders
                    // agree outside the object so the shift is measurable
                    if d_clean > 0.0 {
                        let shift = (d_clean - d_dirty) as f64;
                        assert!(
                            (0.0015..0.0095).contains(&shift),
                            "blob depth shift {shift}"
                        );
                    }
                }
            }
        }
        // two elliptical blobs, 8..25 px semi-axes
        assert!(blob_pixels > 300, "only {blob_pixels} blob pixels");
        assert!(blob_pixels < 4000, "{blob_pixels} blob pixels");
    }

    #[test]
    fn tactile_noise_has_the_configured_scale() {
        let free = inflated();
        let cfg = RenderConfig::default();
        let frames = render_frames(&free, None, &cfg, 5).unwrap();
        let clean = render_membrane_depth(&free, &cfg, cfg.tactile_offset_x).unwrap();
        let mut diffs = Vec::new();
        for v in 0..cfg.height {
            for u in 0..cfg.width {
                let a = frames.tactile_depth.get(u, v);
                let b = clean.get(u, v);
                if a > 0.0 && b > 0.0 {
                    diffs.push((a - b) as f64);
                }
            }
        }
        assert!(diffs.len() > 100_000);
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
            / diffs.len() as f64;
        let sigma = var.sqrt();
        assert!((sigma - 5e-4).abs() < 5e-5, "sigma {sigma}");
        assert!(mean.abs() < 5e-5, "mean {mean}");
    }
}
