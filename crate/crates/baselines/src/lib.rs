//! Single-sensor and physics-based contact estimators used as reference
//! points for the fused pipeline.
//!
//! Three estimators share a rig description ([`RigCalibration`]) and a
//! pressed-free reference frame ([`ReferenceState`]):
//!
//! * [`tactile_only`] thresholds membrane deformation against the
//!   reference and keeps the deepest fraction — blind to near-contact
//!   geometry, fooled by membrane drape.
//! * [`proximity_only`] marks every pixel that moved closer than the
//!   reference — catches approach as well as touch, so it over-reports.
//! * [`MechanicsEstimator`] resamples the tactile depth onto the
//!   membrane grid and inverts the clamped-membrane equilibrium for the
//!   contact load field — sharpest on clean data, noise-limited
//!   otherwise.
//!
//! All three report a [`BaselineOutput`] so downstream evaluation treats
//! them interchangeably with the fused estimate.

use contact_core::{ContactPatch, PixelMask};

pub mod error;
pub mod mechanics;
pub mod observe;
pub mod proximity;
pub mod reference;
pub mod rig;
pub mod tactile;

pub use error::BaselineError;
pub use mechanics::{
    MechanicsDiagnostics, MechanicsEstimator, MechanicsModelConfig, MechanicsOutput, NodeSolution,
};
pub use observe::{observe_membrane_heights, GridObservation};
pub use proximity::proximity_only;
pub use reference::ReferenceState;
pub use rig::RigCalibration;
pub use tactile::{tactile_only, TactileOnlyConfig};

/// Result common to the single-sensor estimators: a contact patch, the
/// pixel support it came from, and how long the estimate took.
#[derive(Debug, Clone)]
pub struct BaselineOutput {
    pub patch: ContactPatch,
    pub mask: PixelMask,
    pub elapsed_s: f64,
}
