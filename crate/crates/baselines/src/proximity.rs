use crate::error::BaselineError;
use crate::reference::ReferenceState;
use crate::rig::RigCalibration;
use crate::BaselineOutput;
use contact_core::{ContactPatch, DepthImage, PatchSource, PixelMask, PointCloud, INVALID_DEPTH};
use std::time::Instant;

/// Contact from the proximity channel alone: object pixels that read
/// nearer than the reference (free membrane) depth at the same pixel.
///
/// `observed` must already be reflection-masked so that only
/// object-colored pixels carry depth; without that the whole draped
/// membrane region differs from the reference and floods the result.
/// Even masked, anything on the object nearer than the free surface is
/// counted — the flank of a deep press reads as contact well before it
/// touches — so this catches every true contact pixel but over-reports
/// area.
pub fn proximity_only(
    observed: &DepthImage,
    reference: &ReferenceState,
    rig: &RigCalibration,
) -> Result<BaselineOutput, BaselineError> {
    let start = Instant::now();
    let dims = reference.proximity().dims();
    if observed.dims() != dims {
        return Err(BaselineError::Observation(format!(
            "proximity frame {}x{} does not match reference {}x{}",
            observed.width(),
            observed.height(),
            dims.width,
            dims.height
        )));
    }
    let w = dims.width as usize;
    let obs_data = observed.data();
    let ref_data = reference.proximity().data();
    let mut mask = PixelMask::new(dims.width, dims.height, false);
    let mut points = Vec::new();
    let mut pixels = Vec::new();
    for (i, (&o, &r)) in obs_data.iter().zip(ref_data).enumerate() {
        if o == INVALID_DEPTH || r == INVALID_DEPTH || o >= r {
            continue;
        }
        mask.bits[i] = true;
        let u = (i % w) as f64;
        let v = (i / w) as f64;
        points.push(
            rig.proximity_intrinsics
                .unproject(u, v, f64::from(o)),
        );
        pixels.push(i as u32);
    }
    let cloud = PointCloud::with_pixels(points, pixels)?;
    Ok(BaselineOutput {
        patch: ContactPatch::new(cloud, PatchSource::ProximityOnly),
        mask,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use contact_core::PinholeIntrinsics;

    const W: u32 = 12;
    const H: u32 = 8;

    fn rig() -> RigCalibration {
        RigCalibration::shared_optics(
            PinholeIntrinsics::new(40.0, 40.0, 6.0, 4.0).unwrap(),
            0.02,
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

    #[test]
    fn keeps_only_pixels_nearer_than_reference() {
        let rig = rig();
        let reference = reference(&rig);
        let mut data = vec![INVALID_DEPTH; (W * H) as usize];
        data[5] = 0.28; // nearer: selected
        data[6] = 0.30; // equal: not contact
        data[7] = 0.32; // farther (object beyond the membrane)
        let obs = DepthImage::from_data(W, H, data).unwrap();
        let out = proximity_only(&obs, &reference, &rig).unwrap();
        assert_eq!(out.mask.count(), 1);
        assert!(out.mask.get(5, 0));
        assert_eq!(out.patch.len(), 1);
        let p = out.patch.cloud.points()[0];
        // native proximity deprojection of pixel (5, 0) at 0.28
        let expect = rig.proximity_intrinsics.unproject(5.0, 0.0, 0.28);
        assert!((p.x - expect.x).abs() < 1e-9);
        assert!((p.z - 0.28).abs() < 1e-7);
    }

    #[test]
    fn hovering_object_yields_empty_patch() {
        let rig = rig();
        let reference = reference(&rig);
        let mut data = vec![INVALID_DEPTH; (W * H) as usize];
        for i in 20..40 {
            data[i] = 0.35; // visible through the membrane, not touching
        }
        let obs = DepthImage::from_data(W, H, data).unwrap();
        let out = proximity_only(&obs, &reference, &rig).unwrap();
        assert!(out.patch.is_empty());
        assert_eq!(out.mask.count(), 0);
    }

    #[test]
    fn rejects_mismatched_frames() {
        let rig = rig();
        let reference = reference(&rig);
        let obs = DepthImage::from_data(W, H + 1, vec![0.3; (W * (H + 1)) as usize]).unwrap();
        assert!(proximity_only(&obs, &reference, &rig).is_err());
    }
}
