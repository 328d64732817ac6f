use crate::error::SimError;
use crate::grid::MembraneGrid;
use crate::membrane::TensionField;
use crate::obstacle::{ObjectKind, ObjectPose};
use crate::qp::KktReport;
use crate::render::RenderConfig;
use crate::scene::{Scene, SceneFrames};
use crate::strain::StrainRegime;
use contact_core::io::{dpth, pgm, ply, ppm};
use contact_core::{DepthImage, PinholeIntrinsics, PixelMask, PointCloud, RgbImage};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const PROXIMITY_DEPTH_FILE: &str = "proximity_depth.dpth";
pub const TACTILE_DEPTH_FILE: &str = "tactile_depth.dpth";
pub const PROXIMITY_RGB_FILE: &str = "proximity_rgb.ppm";
pub const REFERENCE_PROXIMITY_FILE: &str = "reference_proximity.dpth";
pub const REFERENCE_TACTILE_FILE: &str = "reference_tactile.dpth";
pub const ORACLE_MASK_FILE: &str = "oracle_mask.pgm";
pub const ORACLE_CLOUD_FILE: &str = "oracle_cloud.ply";
pub const METADATA_FILE: &str = "metadata.json";

/// Sidecar record describing how a capture was produced. Everything here
/// is derived from the scene spec and solver output — no timestamps, so
/// regenerating a bundle is byte-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMetadata {
    pub object: ObjectKind,
    pub regime: StrainRegime,
    pub seed: u64,
    pub pose: ObjectPose,
    pub displacement_m: f64,
    pub achieved_strain: f64,
    pub pressure: f64,
    pub apex_m: f64,
    pub clamp_height_m: f64,
    pub tension: TensionField,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub membrane_width_m: f64,
    pub membrane_height_m: f64,
    pub intrinsics: PinholeIntrinsics,
    pub tactile_offset_x_m: f64,
    pub contact_nodes: usize,
    pub max_lambda: f64,
    pub kkt: KktReport,
}

impl BundleMetadata {
    pub fn grid(&self) -> MembraneGrid {
        MembraneGrid {
            nx: self.grid_nx,
            ny: self.grid_ny,
            width_m: self.membrane_width_m,
            height_m: self.membrane_height_m,
            ..MembraneGrid::default()
        }
    }
}

/// A capture bundle loaded back from disk: sensor frames, references,
/// and ground truth. The oracle mask lives in proximity pixel space;
/// the oracle cloud carries the contacting grid nodes in meters.
#[derive(Debug, Clone)]
pub struct CaptureBundle {
    pub metadata: BundleMetadata,
    pub proximity_depth: DepthImage,
    pub tactile_depth: DepthImage,
    pub rgb: RgbImage,
    pub reference_proximity: DepthImage,
    pub reference_tactile: DepthImage,
    pub oracle_mask: PixelMask,
    pub oracle_cloud: PointCloud,
}

/// Writes one scene capture into `dir` (created if missing).
pub fn write_bundle(
    dir: &Path,
    scene: &Scene,
    frames: &SceneFrames,
    cfg: &RenderConfig,
) -> Result<(), SimError> {
    fs::create_dir_all(dir)?;
    let metadata = BundleMetadata {
        object: scene.spec.object,
        regime: scene.spec.regime,
        seed: scene.spec.seed,
        pose: scene.spec.pose,
        displacement_m: scene.displacement,
        achieved_strain: scene.achieved_strain,
        pressure: scene.free.pressure,
        apex_m: scene.free.apex(),
        clamp_height_m: scene.free.z_b,
        tension: scene.spec.tension,
        grid_nx: scene.free.grid.nx,
        grid_ny: scene.free.grid.ny,
        membrane_width_m: scene.free.grid.width_m,
        membrane_height_m: scene.free.grid.height_m,
        intrinsics: cfg.intrinsics,
        tactile_offset_x_m: cfg.tactile_offset_x,
        contact_nodes: scene.oracle.mask.count(),
        max_lambda: scene.oracle.max_lambda,
        kkt: scene.kkt,
    };

    dpth::write_file(&dir.join(PROXIMITY_DEPTH_FILE), &frames.press.proximity_depth)?;
    dpth::write_file(&dir.join(TACTILE_DEPTH_FILE), &frames.press.tactile_depth)?;
    ppm::write_rgb_file(&dir.join(PROXIMITY_RGB_FILE), &frames.press.rgb)?;
    dpth::write_file(&dir.join(REFERENCE_PROXIMITY_FILE), &frames.reference_proximity)?;
    dpth::write_file(&dir.join(REFERENCE_TACTILE_FILE), &frames.reference_tactile)?;
    pgm::write_mask8_file(&dir.join(ORACLE_MASK_FILE), &frames.oracle_pixel_mask)?;
    ply::write_cloud_file(&dir.join(ORACLE_CLOUD_FILE), &scene.oracle.cloud)?;

    let mut json = serde_json::to_string_pretty(&metadata)
        .map_err(|e| SimError::Scene(format!("metadata encode: {e}")))?;
    json.push('\n');
    fs::write(dir.join(METADATA_FILE), json)?;
    Ok(())
}

/// Reads a bundle written by [`write_bundle`].
pub fn read_bundle(dir: &Path) -> Result<CaptureBundle, SimError> {
    let metadata_text = fs::read_to_string(dir.join(METADATA_FILE))?;
    let metadata: BundleMetadata = serde_json::from_str(&metadata_text)
        .map_err(|e| SimError::Scene(format!("metadata decode: {e}")))?;
    Ok(CaptureBundle {
        metadata,
        proximity_depth: dpth::read_file(&dir.join(PROXIMITY_DEPTH_FILE))?,
        tactile_depth: dpth::read_file(&dir.join(TACTILE_DEPTH_FILE))?,
        rgb: ppm::read_rgb_file(&dir.join(PROXIMITY_RGB_FILE))?,
        reference_proximity: dpth::read_file(&dir.join(REFERENCE_PROXIMITY_FILE))?,
        reference_tactile: dpth::read_file(&dir.join(REFERENCE_TACTILE_FILE))?,
        oracle_mask: pgm::read_mask8_file(&dir.join(ORACLE_MASK_FILE))?,
        oracle_cloud: ply::read_cloud_file(&dir.join(ORACLE_CLOUD_FILE))?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::obstacle::ObjectKind;
    use crate::scene::SceneSpec;
    use crate::strain::StrainRegime;

    #[test]
    fn bundle_round_trips_through_disk() {
        let spec = SceneSpec::preset(ObjectKind::Cube, StrainRegime::Low, 11);
        let scene = Scene::build(&spec).unwrap();
        let cfg = RenderConfig::default();
        let frames = SceneFrames::render(&scene, &cfg).unwrap();
        let dir = std::env::temp_dir().join(format!("bundle-test-{}", std::process::id()));
        write_bundle(&dir, &scene, &frames, &cfg).unwrap();
        let loaded = read_bundle(&dir).unwrap();

        assert_eq!(loaded.metadata.object, ObjectKind::Cube);
        assert_eq!(loaded.metadata.seed, 11);
        assert_eq!(loaded.metadata.contact_nodes, scene.oracle.mask.count());
        assert_eq!(
            loaded.proximity_depth.data(),
            frames.press.proximity_depth.data()
        );
        assert_eq!(loaded.rgb.data(), frames.press.rgb.data());
        assert_eq!(loaded.oracle_mask.count(), frames.oracle_pixel_mask.count());
        assert!(loaded.oracle_mask.count() > 1000, "pixel ground truth too small");
        assert_eq!(loaded.oracle_cloud.len(), scene.oracle.cloud.len());
        // ply text keeps six decimals; grid coordinates are coarser than that
        for (a, b) in loaded
            .oracle_cloud
            .points()
            .iter()
            .zip(scene.oracle.cloud.points())
        {
            assert!((a.x - b.x).abs() < 1e-6);
            assert!((a.z - b.z).abs() < 1e-6);
        }
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn writing_twice_is_byte_identical() {
        let spec = SceneSpec::preset(ObjectKind::Octopus, StrainRegime::Low, 2);
        let scene = Scene::build(&spec).unwrap();
        let cfg = RenderConfig::default();
        let frames = SceneFrames::render(&scene, &cfg).unwrap();
        let base = std::env::temp_dir().join(format!("bundle-det-{}", std::process::id()));
        let d1 = base.join("a");
        let d2 = base.join("b");
        write_bundle(&d1, &scene, &frames, &cfg).unwrap();
        write_bundle(&d2, &scene, &frames, &cfg).unwrap();
        for name in [
            PROXIMITY_DEPTH_FILE,
            TACTILE_DEPTH_FILE,
            PROXIMITY_RGB_FILE,
            REFERENCE_PROXIMITY_FILE,
            REFERENCE_TACTILE_FILE,
            ORACLE_MASK_FILE,
            ORACLE_CLOUD_FILE,
            METADATA_FILE,
        ] {
            let a = fs::read(d1.join(name)).unwrap();
            let b = fs::read(d2.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between writes");
        }
        fs::remove_dir_all(&base).unwrap();
    }
}
