//! Shared geometry layer for the contact-patch toolkit: depth and RGB image
//! containers, pinhole camera model, homography warping, point clouds with
//! nearest-neighbor search, outlier filtering, patch metrics, ICP registration
//! and the on-disk formats (PLY / PGM / DPTH / PPM).
//!
//! Everything here is an immutable value type with pure operations; frames can
//! be processed in parallel without locking.

pub mod camera;
pub mod cloud;
pub mod color;
pub mod error;
pub mod filter;
pub mod homography;
pub mod image;
pub mod io;
pub mod metrics;
pub mod patch;
pub mod registration;
pub mod spatial;

pub use camera::{deproject, PinholeIntrinsics};
pub use cloud::PointCloud;
pub use color::{rgb_to_hsv, HsvRange};
pub use error::GeometryError;
pub use filter::{statistical_outlier_filter, FilterOutcome};
pub use homography::{warp_depth, Homography};
pub use image::{DepthImage, ImageDims, PixelMask, RgbImage, INVALID_DEPTH};
pub use metrics::rmse_between_mm;
pub use patch::{ContactPatch, PatchSource};
pub use registration::{icp_point_to_plane, icp_point_to_point, IcpParams, IcpResult};
pub use spatial::NeighborIndex;
