use crate::cloud::PointCloud;
use crate::error::GeometryError;
use crate::spatial::NeighborIndex;
use nalgebra::{
    Isometry3, Matrix3, Matrix6, Point3, Rotation3, Translation3, UnitQuaternion, Vector3, Vector6,
};

#[derive(Debug, Clone, Copy)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Stop when the change in correspondence RMSE between iterations
    /// falls below this (meters).
    pub convergence_delta_m: f64,
    /// Reject correspondences farther than this (meters); None keeps all.
    pub max_correspondence_m: Option<f64>,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            convergence_delta_m: 1e-6,
            max_correspondence_m: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IcpResult {
    /// Rigid map taking source-frame points onto the target.
    pub transform: Isometry3<f64>,
    /// Euclidean RMSE over inlier correspondences at the final pose (meters).
    pub rmse_m: f64,
    pub iterations: usize,
    /// Fraction of source points with an inlier correspondence.
    pub fitness: f64,
    pub converged: bool,
}

struct Correspondences {
    pairs: Vec<(Point3<f64>, usize)>, // transformed source point, target index
    rmse: f64,
    fitness: f64,
}

fn correspond(
    source: &PointCloud,
    index: &NeighborIndex,
    pose: &Isometry3<f64>,
    max_corr: Option<f64>,
) -> Correspondences {
    let max_sq = max_corr.map(|m| m * m).unwrap_or(f64::INFINITY);
    let mut pairs = Vec::with_capacity(source.len());
    let mut sum_sq = 0.0;
    for p in source.points() {
        let tp = pose * p;
        let (j, d2) = index.nearest(&tp).expect("non-empty target");
        if d2 <= max_sq {
            pairs.push((tp, j));
            sum_sq += d2;
        }
    }
    let rmse = if pairs.is_empty() {
        f64::INFINITY
    } else {
        (sum_sq / pairs.len() as f64).sqrt()
    };
    Correspondences {
        fitness: pairs.len() as f64 / source.len() as f64,
        pairs,
        rmse,
    }
}

fn renormalized(iso: &Isometry3<f64>) -> Isometry3<f64> {
    Isometry3::from_parts(
        iso.translation,
        UnitQuaternion::new_normalize(iso.rotation.into_inner()),
    )
}

/// Point-to-point ICP aligning `source` onto `target`, starting from
/// `init`. Each iteration pairs every source point with its nearest
/// target point and solves the closed-form least-squares rigid fit
/// (SVD of the cross-covariance).
pub fn icp_point_to_point(
    source: &PointCloud,
    target: &PointCloud,
    init: &Isometry3<f64>,
    params: &IcpParams,
) -> Result<IcpResult, GeometryError> {
    if source.is_empty() {
        return Err(GeometryError::EmptyCloud("icp: empty source"));
    }
    if target.is_empty() {
        return Err(GeometryError::EmptyCloud("icp: empty target"));
    }
    let index = NeighborIndex::build(target.points());
    let mut pose = *init;
    let mut prev_rmse = f64::INFINITY;
    let mut last = correspond(source, &index, &pose, params.max_correspondence_m);
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=params.max_iterations {
        iterations = it;
        if last.pairs.is_empty() {
            return Err(GeometryError::Registration(
                "no correspondences within range".into(),
            ));
        }
        let n = last.pairs.len() as f64;
        let mut sc = Vector3::zeros();
        let mut tc = Vector3::zeros();
        for (sp, j) in &last.pairs {
            sc += sp.coords;
            tc += target.points()[*j].coords;
        }
        sc /= n;
        tc /= n;
        let mut h = Matrix3::zeros();
        for (sp, j) in &last.pairs {
            h += (sp.coords - sc) * (target.points()[*j].coords - tc).transpose();
        }
        let svd = h.svd(true, true);
        let u = svd.u.expect("svd with u");
        let vt = svd.v_t.expect("svd with v_t");
        let mut r = vt.transpose() * u.transpose();
        if r.determinant() < 0.0 {
            // reflection case: flip the axis of least variance
            let mut flip = Matrix3::identity();
            flip[(2, 2)] = -1.0;
            r = vt.transpose() * flip * u.transpose();
        }
        let rot = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
        let t = tc - rot * sc;
        let delta = Isometry3::from_parts(Translation3::from(t), rot);
        pose = renormalized(&(delta * pose));

        last = correspond(source, &index, &pose, params.max_correspondence_m);
        if (prev_rmse - last.rmse).abs() < params.convergence_delta_m {
            converged = true;
            break;
        }
        prev_rmse = last.rmse;
    }

    Ok(IcpResult {
        transform: pose,
        rmse_m: last.rmse,
        iterations,
        fitness: last.fitness,
        converged,
    })
}

/// Point-to-plane ICP aligning `source` onto `target`, whose points carry
/// per-point unit normals. Minimizes the sum of squared point-to-tangent-
/// plane distances via the small-angle 6x6 normal equations, applying the
/// exact rotation exponential each step.
///
/// Converges in far fewer iterations than point-to-point on smooth
/// surfaces, at the cost of needing normals and of a singular system when
/// the geometry underconstrains the pose (e.g. a single flat plane).
pub fn icp_point_to_plane(
    source: &PointCloud,
    target: &PointCloud,
    target_normals: &[Vector3<f64>],
    init: &Isometry3<f64>,
    params: &IcpParams,
) -> Result<IcpResult, GeometryError> {
    if source.is_empty() {
        return Err(GeometryError::EmptyCloud("icp: empty source"));
    }
    if target.is_empty() {
        return Err(GeometryError::EmptyCloud("icp: empty target"));
    }
    if target_normals.len() != target.len() {
        return Err(GeometryError::DimensionMismatch(format!(
            "{} normals for {} target points",
            target_normals.len(),
            target.len()
        )));
    }
    let index = NeighborIndex::build(target.points());
    let mut pose = *init;
    let mut prev_rmse = f64::INFINITY;
    let mut last = correspond(source, &index, &pose, params.max_correspondence_m);
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=params.max_iterations {
        iterations = it;
        if last.pairs.is_empty() {
            return Err(GeometryError::Registration(
                "no correspondences within range".into(),
            ));
        }
        let mut a = Matrix6::<f64>::zeros();
        let mut b = Vector6::<f64>::zeros();
        for (sp, j) in &last.pairs {
            let q = target.points()[*j];
            let n = target_normals[*j];
            let residual = (sp - q).dot(&n);
            let row_rot = sp.coords.cross(&n);
            let mut row = Vector6::zeros();
            row.fixed_rows_mut::<3>(0).copy_from(&row_rot);
            row.fixed_rows_mut::<3>(3).copy_from(&n);
            a += row * row.transpose();
            b -= row * residual;
        }
        // tiny Tikhonov term keeps near-degenerate geometry solvable
        let damping = 1e-10 * a.diagonal().max().max(1e-30);
        for i in 0..6 {
            a[(i, i)] += damping;
        }
        let x = a.cholesky().map(|c| c.solve(&b)).ok_or_else(|| {
            GeometryError::Registration("degenerate point-to-plane system".into())
        })?;
        let omega = Vector3::new(x[0], x[1], x[2]);
        let tau = Vector3::new(x[3], x[4], x[5]);
        let delta = Isometry3::from_parts(
            Translation3::from(tau),
            UnitQuaternion::from_scaled_axis(omega),
        );
        pose = renormalized(&(delta * pose));

        last = correspond(source, &index, &pose, params.max_correspondence_m);
        if (prev_rmse - last.rmse).abs() < params.convergence_delta_m {
            converged = true;
            break;
        }
        prev_rmse = last.rmse;
    }

    Ok(IcpResult {
        transform: pose,
        rmse_m: last.rmse,
        iterations,
        fitness: last.fitness,
        converged,
    })
}
