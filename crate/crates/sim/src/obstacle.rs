use crate::error::SimError;
use crate::grid::MembraneGrid;
use crate::membrane::MembraneState;
use serde::{Deserialize, Serialize};

/// Test objects pressed into the membrane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectKind {
    /// Flat cube face.
    Cube,
    /// Smooth dome (toy octopus head).
    Octopus,
    /// Inverted mug: contact through a thin rim ring plus a raised handle.
    Cup,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 3] = [ObjectKind::Cube, ObjectKind::Octopus, ObjectKind::Cup];

    pub fn as_str(&self) -> &'static str {
        match self {
            ObjectKind::Cube => "cube",
            ObjectKind::Octopus => "octopus",
            ObjectKind::Cup => "cup",
        }
    }
}

impl std::fmt::Display for ObjectKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ObjectKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cube" => Ok(ObjectKind::Cube),
            "octopus" => Ok(ObjectKind::Octopus),
            "cup" => Ok(ObjectKind::Cup),
            other => Err(SimError::Config(format!("unknown object kind '{other}'"))),
        }
    }
}

/// Planar pose of the object over the membrane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectPose {
    pub x: f64,
    pub y: f64,
    /// Rotation about the vertical axis, radians.
    #[serde(default)]
    pub yaw: f64,
}

impl Default for ObjectPose {
    fn default() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
        }
    }
}

impl ObjectPose {
    /// World (x, y) to object-local coordinates.
    #[inline]
    pub fn to_local(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = x - self.x;
        let dy = y - self.y;
        let (s, c) = (-self.yaw).sin_cos();
        (c * dx - s * dy, s * dx + c * dy)
    }

    /// Object-local (x, y) to world coordinates.
    #[inline]
    pub fn to_world(&self, lx: f64, ly: f64) -> (f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        (c * lx - s * ly + self.x, s * lx + c * ly + self.y)
    }
}

/// Underside geometry in object-local coordinates. Heights are measured
/// upward from the object's lowest plane (so the deepest feature sits at 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Primitive {
    SphereCap {
        sphere_radius: f64,
        cap_radius: f64,
    },
    FlatBox {
        half_extent: f64,
    },
    CupRim {
        outer_radius: f64,
        rim_width: f64,
        /// Radial extent of the handle block.
        handle_length: f64,
        /// Tangential extent of the handle block.
        handle_width: f64,
        /// Gap between the outer rim and the near edge of the handle.
        handle_gap: f64,
        /// Handle underside height above the rim plane.
        handle_lift: f64,
        /// Interior floor height above the rim plane (seen through the hole).
        interior_depth: f64,
    },
}

impl Primitive {
    /// Canonical dimensions of each test object, meters.
    pub fn for_kind(kind: ObjectKind) -> Primitive {
        match kind {
            ObjectKind::Cube => Primitive::FlatBox { half_extent: 0.0285 },
            ObjectKind::Octopus => Primitive::SphereCap {
                sphere_radius: 0.060,
                cap_radius: 0.045,
            },
            ObjectKind::Cup => Primitive::CupRim {
                outer_radius: 0.045,
                rim_width: 0.004,
                handle_length: 0.025,
                handle_width: 0.015,
                handle_gap: 0.010,
                handle_lift: 0.002,
                interior_depth: 0.080,
            },
        }
    }

    /// Height of the underside above the lowest plane at local (x, y);
    /// `None` outside the footprint.
    pub fn local_underside(&self, x: f64, y: f64) -> Option<f64> {
        match *self {
            Primitive::SphereCap {
                sphere_radius,
                cap_radius,
            } => {
                let r2 = x * x + y * y;
                if r2 <= cap_radius * cap_radius {
                    Some(sphere_radius - (sphere_radius * sphere_radius - r2).sqrt())
                } else {
                    None
                }
            }
            Primitive::FlatBox { half_extent } => {
                if x.abs() <= half_extent && y.abs() <= half_extent {
                    Some(0.0)
                } else {
                    None
                }
            }
            Primitive::CupRim {
                outer_radius,
                rim_width,
                handle_length,
                handle_width,
                handle_gap,
                handle_lift,
                interior_depth,
            } => {
                let r = (x * x + y * y).sqrt();
                if r <= outer_radius {
                    if r >= outer_radius - rim_width {
                        Some(0.0)
                    } else {
                        Some(interior_depth)
                    }
                } else {
                    let x0 = outer_radius + handle_gap;
                    if x >= x0 && x <= x0 + handle_length && y.abs() <= 0.5 * handle_width {
                        Some(handle_lift)
                    } else {
                        None
                    }
                }
            }
        }
    }

    /// Radius of a disc (about the local origin) that covers the footprint.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Primitive::SphereCap { cap_radius, .. } => cap_radius,
            Primitive::FlatBox { half_extent } => half_extent * std::f64::consts::SQRT_2,
            Primitive::CupRim {
                outer_radius,
                handle_length,
                handle_width,
                handle_gap,
                ..
            } => {
                let hx = outer_radius + handle_gap + handle_length;
                let hy = 0.5 * handle_width;
                (hx * hx + hy * hy).sqrt().max(outer_radius)
            }
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = match *self {
            Primitive::SphereCap {
                sphere_radius,
                cap_radius,
            } => 0.0 < cap_radius && cap_radius <= sphere_radius,
            Primitive::FlatBox { half_extent } => half_extent > 0.0,
            Primitive::CupRim {
                outer_radius,
                rim_width,
                handle_length,
                handle_width,
                handle_gap,
                handle_lift,
                interior_depth,
            } => {
                0.0 < rim_width
                    && rim_width < outer_radius
                    && handle_length > 0.0
                    && handle_width > 0.0
                    && handle_gap >= 0.0
                    && handle_lift >= 0.0
                    && interior_depth > handle_lift
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::Model("degenerate object dimensions".into()))
        }
    }
}

/// A rigid object held at a fixed height above the camera plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RigidObstacle {
    pub kind: ObjectKind,
    pub primitive: Primitive,
    pub pose: ObjectPose,
    /// Height of the object's lowest plane above the camera plane.
    pub base_height: f64,
}

impl RigidObstacle {
    /// Underside height above the camera plane at world (x, y).
    pub fn underside(&self, x: f64, y: f64) -> Option<f64> {
        let (lx, ly) = self.pose.to_local(x, y);
        self.primitive
            .local_underside(lx, ly)
            .map(|h| self.base_height + h)
    }

    /// Obstacle field on the interior grid nodes; +inf where the object
    /// casts no constraint.
    pub fn interior_phi(&self, grid: &MembraneGrid) -> Vec<f64> {
        let mut phi = vec![f64::INFINITY; (grid.nx - 2) * (grid.ny - 2)];
        for j in 1..grid.ny - 1 {
            for i in 1..grid.nx - 1 {
                if let Some(h) = self.underside(grid.node_x(i), grid.node_y(j)) {
                    phi[(j - 1) * (grid.nx - 2) + (i - 1)] = h;
                }
            }
        }
        phi
    }

    /// Base height at which the object, lowered vertically over `free`,
    /// first touches the membrane. Errors if the footprint misses the
    /// membrane entirely.
    pub fn first_touch_height(
        primitive: &Primitive,
        pose: &ObjectPose,
        free: &MembraneState,
    ) -> Result<f64, SimError> {
        let g = &free.grid;
        let mut best = f64::NEG_INFINITY;
        for j in 0..g.ny {
            for i in 0..g.nx {
                let (lx, ly) = pose.to_local(g.node_x(i), g.node_y(j));
                if let Some(h) = primitive.local_underside(lx, ly) {
                    best = best.max(free.z[g.index(i, j)] - h);
                }
            }
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(SimError::Scene(
                "object footprint does not overlap the membrane".into(),
            ))
        }
    }

    /// Places the object `displacement` below its first-touch height.
    pub fn lowered_onto(
        kind: ObjectKind,
        pose: ObjectPose,
        free: &MembraneState,
        displacement: f64,
    ) -> Result<RigidObstacle, SimError> {
        let primitive = Primitive::for_kind(kind);
        primitive.validate()?;
        if displacement < 0.0 || !displacement.is_finite() {
            return Err(SimError::Range(format!(
                "displacement must be ≥ 0, got {displacement}"
            )));
        }
        let touch = Self::first_touch_height(&primitive, &pose, free)?;
        Ok(RigidObstacle {
            kind,
            primitive,
            pose,
            base_height: touch - displacement,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::membrane::{inflate_membrane, TensionField};

    #[test]
    fn sphere_cap_underside_is_radial_and_bounded() {
        let p = Primitive::for_kind(ObjectKind::Octopus);
        assert_eq!(p.local_underside(0.0, 0.0), Some(0.0));
        let edge = p.local_underside(0.045, 0.0).unwrap();
        // 60 mm sphere, 45 mm cap: edge rises 60 − sqrt(60² − 45²) ≈ 20.3 mm
        assert!((edge - 0.0203).abs() < 2e-4);
        assert!(p.local_underside(0.046, 0.0).is_none());
        // monotone in radius
        let a = p.local_underside(0.010, 0.0).unwrap();
        let b = p.local_underside(0.020, 0.0).unwrap();
        assert!(b > a);
    }

    #[test]
    fn box_footprint_rotates_with_yaw() {
        let pose = ObjectPose {
            x: 0.0,
            y: 0.0,
            yaw: std::f64::consts::FRAC_PI_4,
        };
        let obstacle = RigidObstacle {
            kind: ObjectKind::Cube,
            primitive: Primitive::for_kind(ObjectKind::Cube),
            pose,
            base_height: 0.3,
        };
        // at 45° the face's corner reaches sqrt(2)·28.5 mm ≈ 40.3 mm along x
        assert!(obstacle.underside(0.040, 0.0).is_some());
        assert!(obstacle.underside(0.0, 0.040).is_some());
        // but the axis-aligned mid-edge distance shrinks the other way
        assert!(obstacle.underside(0.029, 0.029).is_none());
        assert!(obstacle.underside(0.020, 0.015).is_some());
    }

    #[test]
    fn cup_has_rim_hole_and_raised_handle() {
        let p = Primitive::for_kind(ObjectKind::Cup);
        assert_eq!(p.local_underside(0.043, 0.0), Some(0.0)); // on the rim
        assert_eq!(p.local_underside(0.0, 0.0), Some(0.080)); // interior floor
        assert_eq!(p.local_underside(0.060, 0.0), Some(0.002)); // handle
        assert!(p.local_underside(0.050, 0.0).is_none()); // gap before handle
        assert!(p.local_underside(0.0, 0.060).is_none()); // off the side
        assert!(p.local_underside(0.081, 0.0).is_none()); // past the handle
    }

    #[test]
    fn first_touch_matches_apex_for_centered_flat_face() {
        let g = MembraneGrid::default();
        let free = inflate_membrane(&g, &TensionField::default(), 60.0, 0.3).unwrap();
        let touch = RigidObstacle::first_touch_height(
            &Primitive::for_kind(ObjectKind::Cube),
            &ObjectPose::default(),
            &free,
        )
        .unwrap();
        // a flat face over the apex touches exactly at the apex
        assert!((touch - free.apex()).abs() < 1e-12);
    }

    #[test]
    fn lowering_reduces_base_height_by_displacement() {
        let g = MembraneGrid::default();
        let free = inflate_membrane(&g, &TensionField::default(), 60.0, 0.3).unwrap();
        let a =
            RigidObstacle::lowered_onto(ObjectKind::Octopus, ObjectPose::default(), &free, 0.0)
                .unwrap();
        let b =
            RigidObstacle::lowered_onto(ObjectKind::Octopus, ObjectPose::default(), &free, 0.02)
                .unwrap();
        assert!((a.base_height - b.base_height - 0.02).abs() < 1e-12);
    }

    #[test]
    fn off_membrane_pose_is_rejected() {
        let g = MembraneGrid::default();
        let free = inflate_membrane(&g, &TensionField::default(), 60.0, 0.3).unwrap();
        let pose = ObjectPose {
            x: 10.0,
            y: 0.0,
            yaw: 0.0,
        };
        assert!(RigidObstacle::lowered_onto(ObjectKind::Cube, pose, &free, 0.01).is_err());
    }
}
