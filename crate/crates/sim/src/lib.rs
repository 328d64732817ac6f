//! Synthetic scene generator for the contact-patch toolkit.
//!
//! Models the sensor as a pressurized linear-elastic membrane over a
//! rectangular clamped frame, presses rigid primitives into it by solving
//! the obstacle problem (a convex QP with certified KKT residuals — the
//! multipliers are the analytic contact ground truth), and renders the
//! result through two virtual depth cameras plus a color image with
//! seeded reflection noise.

pub mod active_set;
pub mod banded;
pub mod bundle;
pub mod error;
pub mod grid;
pub mod membrane;
pub mod obstacle;
pub mod press;
pub mod qp;
pub mod render;
pub mod scene;
pub mod strain;

pub use error::SimError;
pub use grid::{GridMask, MembraneGrid};
pub use membrane::{calibrate_pressure, inflate_membrane, MembraneState, Operator, TensionField};
pub use obstacle::{ObjectKind, ObjectPose, Primitive, RigidObstacle};
pub use press::{press_object, ContactOracle};
pub use qp::KktReport;
pub use render::{render_frames, render_membrane_depth, RenderConfig, SensorFrames};
pub use scene::{Scene, SceneFrames, SceneSpec, CLAMP_HEIGHT_M};
pub use strain::{displacement_for_strain, DotGrid, StrainRegime};
