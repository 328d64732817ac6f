//! Contact-patch estimation by proximity/tactile depth fusion.
//!
//! The proximity camera sees through the translucent membrane: where the
//! object shows through, its depth is reported; elsewhere the membrane's own
//! weak reflection comes back. The tactile camera images the membrane surface
//! alone. On contact the two surfaces coincide, so after aligning the frames
//! and discarding reflection-colored proximity pixels, the pixels where both
//! depths agree to within a small relative tolerance are exactly the contact
//! patch. The pipeline deprojects those pixels and trims statistical outliers.

pub mod config;
pub mod error;
pub mod frame;
pub mod pipeline;

pub use config::FusionConfig;
pub use error::FusionError;
pub use frame::FrameBundle;
pub use pipeline::{
    align_frames, depth_consistent, estimate_contact_patch, intersect, proximity_mask,
    tolerance_band_m, FusionEstimate, StageTimings,
};
