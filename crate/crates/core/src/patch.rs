use crate::cloud::PointCloud;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Which estimator produced a contact patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatchSource {
    #[serde(rename = "fusion")]
    Fusion,
    #[serde(rename = "tactile-only")]
    TactileOnly,
    #[serde(rename = "proximity-only")]
    ProximityOnly,
    #[serde(rename = "mechanics-model")]
    MechanicsModel,
    #[serde(rename = "ground-truth")]
    GroundTruth,
}

impl PatchSource {
    pub fn as_str(&self) -> &'static str {
        match self {
            PatchSource::Fusion => "fusion",
            PatchSource::TactileOnly => "tactile-only",
            PatchSource::ProximityOnly => "proximity-only",
            PatchSource::MechanicsModel => "mechanics-model",
            PatchSource::GroundTruth => "ground-truth",
        }
    }

    pub const ALL_ESTIMATORS: [PatchSource; 4] = [
        PatchSource::Fusion,
        PatchSource::TactileOnly,
        PatchSource::ProximityOnly,
        PatchSource::MechanicsModel,
    ];
}

impl fmt::Display for PatchSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PatchSource {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fusion" => Ok(PatchSource::Fusion),
            "tactile-only" => Ok(PatchSource::TactileOnly),
            "proximity-only" => Ok(PatchSource::ProximityOnly),
            "mechanics-model" => Ok(PatchSource::MechanicsModel),
            "ground-truth" => Ok(PatchSource::GroundTruth),
            other => Err(format!("unknown patch source {other:?}")),
        }
    }
}

/// Estimated (or ground-truth) contact region as 3D points in the
/// proximity camera frame, tagged with the estimator that produced it.
/// Empty patches are legal — they mean "no contact detected".
#[derive(Debug, Clone)]
pub struct ContactPatch {
    pub cloud: PointCloud,
    pub source: PatchSource,
}

impl ContactPatch {
    pub fn new(cloud: PointCloud, source: PatchSource) -> Self {
        Self { cloud, source }
    }

    pub fn empty(source: PatchSource) -> Self {
        Self {
            cloud: PointCloud::empty(),
            source,
        }
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }
}
