use crate::cloud::PointCloud;
use crate::error::GeometryError;
use crate::spatial::NeighborIndex;

/// Root-mean-square distance, in millimeters, from each point of `est` to
/// its nearest point in `reference`.
///
/// Directional: coverage gaps in `est` are invisible to this metric.
/// Rigid alignment, if any, is the caller's job.
pub fn rmse_between_mm(est: &PointCloud, reference: &PointCloud) -> Result<f64, GeometryError> {
    if est.is_empty() {
        return Err(GeometryError::EmptyCloud("rmse: no estimated points"));
    }
    if reference.is_empty() {
        return Err(GeometryError::EmptyCloud("rmse: no reference points"));
    }
    let index = NeighborIndex::build(reference.points());
    let sum_sq: f64 = est
        .points()
        .iter()
        .map(|p| index.nearest(p).expect("non-empty reference").1)
        .sum();
    Ok((sum_sq / est.len() as f64).sqrt() * 1000.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Point3;

    fn plane(n: u32, spacing: f64) -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..n {
            for j in 0..n {
                pts.push(Point3::new(i as f64 * spacing, j as f64 * spacing, 0.3));
            }
        }
        PointCloud::new(pts).unwrap()
    }

    #[test]
    fn identical_clouds_zero() {
        let c = plane(15, 0.004);
        assert_relative_eq!(rmse_between_mm(&c, &c).unwrap(), 0.0);
    }

    #[test]
    fn uniform_offset_reports_offset() {
        let c = plane(15, 0.004);
        let shift = nalgebra::Isometry3::translation(0.0, 0.0, 0.003);
        let shifted = c.transformed(&shift);
        assert_relative_eq!(rmse_between_mm(&shifted, &c).unwrap(), 3.0, epsilon = 1e-9);
    }

    #[test]
    fn mixed_distances_combine_quadratically() {
        let reference = PointCloud::new(vec![
            Point3::new(0.0, 0.0, 0.3),
            Point3::new(1.0, 0.0, 0.3),
        ])
        .unwrap();
        let est = PointCloud::new(vec![
            Point3::new(0.001, 0.0, 0.3),
            Point3::new(1.0, 0.007, 0.3),
        ])
        .unwrap();
        // sqrt((1^2 + 7^2)/2) = 5 mm
        assert_relative_eq!(rmse_between_mm(&est, &reference).unwrap(), 5.0, epsilon = 1e-9);
    }

    #[test]
    fn empty_inputs_error() {
        let c = plane(3, 0.004);
        assert!(rmse_between_mm(&PointCloud::empty(), &c).is_err());
        assert!(rmse_between_mm(&c, &PointCloud::empty()).is_err());
    }
}
