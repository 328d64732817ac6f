use crate::error::SimError;
use crate::grid::GridMask;
use crate::membrane::{MembraneState, Operator};
use crate::obstacle::RigidObstacle;
use crate::qp::{solve_obstacle_psor, touches, KktReport, PsorOptions};
use contact_core::PointCloud;
use nalgebra::Point3;

/// Mechanical travel stop: the press rig cannot push the membrane more
/// than this far below its clamped boundary.
pub const TRAVEL_FLOOR_M: f64 = 0.085;

/// Contact-mask threshold as a fraction of the peak multiplier.
pub const LAMBDA_MASK_RATIO: f64 = 1e-8;

/// Exact contact ground truth extracted from the equilibrium multipliers.
#[derive(Debug, Clone)]
pub struct ContactOracle {
    /// Grid nodes in contact.
    pub mask: GridMask,
    /// World-space points of the contacting nodes (on the object surface).
    pub cloud: PointCloud,
    /// Full-grid contact pressure multipliers (zero on the boundary ring).
    pub lambda: Vec<f64>,
    pub max_lambda: f64,
}

/// Presses a rigid object into an inflated membrane and returns the
/// deformed equilibrium together with the contact oracle.
pub fn press_object(
    free: &MembraneState,
    obstacle: &RigidObstacle,
) -> Result<(MembraneState, ContactOracle, KktReport), SimError> {
    press_object_with(free, obstacle, None, &PsorOptions::default())
}

/// [`press_object`] with an explicit warm start (interior heights from a
/// nearby solve) and solver controls. Repeated presses of the same scene
/// at slightly different depths converge far faster through this path.
pub fn press_object_with(
    free: &MembraneState,
    obstacle: &RigidObstacle,
    warm_start: Option<&[f64]>,
    opts: &PsorOptions,
) -> Result<(MembraneState, ContactOracle, KktReport), SimError> {
    let g = &free.grid;

    // the clamp must win at the boundary: an object cutting below the
    // clamped ring would make the constrained problem infeasible
    for j in 0..g.ny {
        for i in 0..g.nx {
            if !g.is_boundary(i, j) {
                continue;
            }
            if let Some(h) = obstacle.underside(g.node_x(i), g.node_y(j)) {
                if h < free.z_b - 1e-12 {
                    return Err(SimError::Scene(format!(
                        "object cuts {:.1} mm below the clamped boundary",
                        (free.z_b - h) * 1e3
                    )));
                }
            }
        }
    }

    // travel stop: nothing may reach below z_b − 85 mm
    let mut lowest = f64::INFINITY;
    for j in 0..g.ny {
        for i in 0..g.nx {
            if let Some(h) = obstacle.underside(g.node_x(i), g.node_y(j)) {
                lowest = lowest.min(h);
            }
        }
    }
    if lowest < free.z_b - TRAVEL_FLOOR_M - 1e-12 {
        return Err(SimError::Range(format!(
            "object bottoms out: underside at {:.1} mm below the clamp exceeds the {:.0} mm travel stop",
            (free.z_b - lowest) * 1e3,
            TRAVEL_FLOOR_M * 1e3
        )));
    }

    let op = Operator::new(g, &free.tension)?;
    let f = op.rhs(free.pressure, free.z_b);
    let phi = obstacle.interior_phi(g);
    let free_interior: Vec<f64>;
    let warm = match warm_start {
        Some(w) => w,
        None => {
            free_interior = (1..g.ny - 1)
                .flat_map(|j| (1..g.nx - 1).map(move |i| (i, j)))
                .map(|(i, j)| free.z[g.index(i, j)])
                .collect();
            &free_interior
        }
    };
    let sol = solve_obstacle_psor(&op, &f, &phi, Some(warm), opts)?;

    let pressed = MembraneState {
        grid: *g,
        z: op.expand(&sol.z, free.z_b),
        tension: free.tension.clone(),
        pressure: free.pressure,
        z_b: free.z_b,
    };

    let max_lambda = sol.lambda.iter().cloned().fold(0.0f64, f64::max);
    let threshold = LAMBDA_MASK_RATIO * max_lambda;
    let mut mask = GridMask::new(g.nx, g.ny);
    let mut lambda = vec![0.0; g.node_count()];
    let mut points = Vec::new();
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let m = (j - 1) * (g.nx - 2) + (i - 1);
            lambda[g.index(i, j)] = sol.lambda[m];
            let in_contact = max_lambda > 0.0
                && sol.lambda[m] > threshold
                && phi[m].is_finite()
                && touches(sol.z[m], phi[m]);
            if in_contact {
                mask.set(i, j, true);
                points.push(Point3::new(g.node_x(i), g.node_y(j), sol.z[m]));
            }
        }
    }
    let cloud = if points.is_empty() {
        PointCloud::empty()
    } else {
        PointCloud::new(points)?
    };

    Ok((
        pressed,
        ContactOracle {
            mask,
            cloud,
            lambda,
            max_lambda,
        },
        sol.report,
    ))
}
