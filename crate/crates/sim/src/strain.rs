use crate::error::SimError;
use crate::membrane::MembraneState;
use crate::obstacle::{ObjectKind, ObjectPose, RigidObstacle};
use crate::press::{press_object_with, TRAVEL_FLOOR_M};
use crate::qp::PsorOptions;
use nalgebra::Point3;
use serde::{Deserialize, Serialize};

/// Printed dot lattice used to read membrane strain off camera frames.
/// Dots ride the membrane; lateral slip is neglected, so a dot at rest
/// position (x, y) sits at (x, y, z(x, y)) on the deformed surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DotGrid {
    pub pitch: f64,
    pub dots_x: usize,
    pub dots_y: usize,
}

impl Default for DotGrid {
    fn default() -> Self {
        // 350 x 200 mm lattice, 10 mm pitch, centered on the membrane
        Self {
            pitch: 0.010,
            dots_x: 36,
            dots_y: 21,
        }
    }
}

impl DotGrid {
    fn dot_x(&self, i: usize) -> f64 {
        (i as f64 - 0.5 * (self.dots_x - 1) as f64) * self.pitch
    }

    fn dot_y(&self, j: usize) -> f64 {
        (j as f64 - 0.5 * (self.dots_y - 1) as f64) * self.pitch
    }

    /// Peak engineering strain over all laterally adjacent dot pairs,
    /// from tracked dot positions in lattice row-major order:
    /// (deformed separation − pitch) / pitch.
    pub fn strain_from_positions(&self, dots: &[Point3<f64>]) -> Result<f64, SimError> {
        if self.pitch <= 0.0 || self.dots_x < 2 || self.dots_y < 2 {
            return Err(SimError::Measurement("degenerate dot grid".into()));
        }
        if dots.len() != self.dots_x * self.dots_y {
            return Err(SimError::Measurement(format!(
                "expected {} dots, got {}",
                self.dots_x * self.dots_y,
                dots.len()
            )));
        }
        let mut peak = f64::NEG_INFINITY;
        let mut pair = |a: &Point3<f64>, b: &Point3<f64>| {
            peak = peak.max((b - a).norm() / self.pitch - 1.0);
        };
        for j in 0..self.dots_y {
            for i in 0..self.dots_x {
                let at = &dots[j * self.dots_x + i];
                if i + 1 < self.dots_x {
                    pair(at, &dots[j * self.dots_x + i + 1]);
                }
                if j + 1 < self.dots_y {
                    pair(at, &dots[(j + 1) * self.dots_x + i]);
                }
            }
        }
        Ok(peak)
    }

    /// Dot positions riding a deformed membrane (vertical motion only).
    pub fn track_on(&self, state: &MembraneState) -> Result<Vec<Point3<f64>>, SimError> {
        let g = &state.grid;
        let mut dots = Vec::with_capacity(self.dots_x * self.dots_y);
        for j in 0..self.dots_y {
            for i in 0..self.dots_x {
                let (x, y) = (self.dot_x(i), self.dot_y(j));
                let z = g.interpolate(&state.z, x, y).ok_or_else(|| {
                    SimError::Measurement(format!("dot ({x:.3}, {y:.3}) falls off the membrane"))
                })?;
                dots.push(Point3::new(x, y, z));
            }
        }
        Ok(dots)
    }

    /// Peak strain of a membrane state's dot lattice.
    pub fn measure_strain(&self, state: &MembraneState) -> Result<f64, SimError> {
        self.strain_from_positions(&self.track_on(state)?)
    }
}

/// Named operating points for scene generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrainRegime {
    Low,
    Medium,
    High,
}

impl StrainRegime {
    pub const ALL: [StrainRegime; 3] = [
        StrainRegime::Low,
        StrainRegime::Medium,
        StrainRegime::High,
    ];

    /// Peak membrane strain the scene should exhibit.
    pub fn target_strain(&self) -> f64 {
        match self {
            StrainRegime::Low => 0.10,
            StrainRegime::Medium => 0.60,
            StrainRegime::High => 1.00,
        }
    }

    /// Apex height the membrane is inflated to before the press, meters
    /// above the camera plane.
    pub fn apex_height(&self) -> f64 {
        match self {
            StrainRegime::Low | StrainRegime::Medium => 0.314,
            StrainRegime::High => 0.380,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            StrainRegime::Low => "low",
            StrainRegime::Medium => "medium",
            StrainRegime::High => "high",
        }
    }
}

impl std::fmt::Display for StrainRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StrainRegime {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "low" => Ok(StrainRegime::Low),
            "medium" => Ok(StrainRegime::Medium),
            "high" => Ok(StrainRegime::High),
            other => Err(SimError::Config(format!("unknown strain regime '{other}'"))),
        }
    }
}

/// Finds the press displacement that brings the peak dot-grid strain to
/// `target`, by bisection.
///
/// Peak strain is not monotone from zero: a shallow press flattens the
/// inflated dome and briefly *lowers* the peak before the walls around
/// the deepening contact drive it back up. Bisection is still sound for
/// targets above the inflation floor — every probe below the target
/// steers deeper, so the search converges onto the rising branch — and
/// the bracket ends are checked so unreachable targets fail loudly
/// instead of silently saturating.
pub fn displacement_for_strain(
    free: &MembraneState,
    kind: ObjectKind,
    pose: ObjectPose,
    dots: &DotGrid,
    target: f64,
) -> Result<f64, SimError> {
    if !(0.0..10.0).contains(&target) {
        return Err(SimError::Range(format!("strain target {target} out of range")));
    }
    let s0 = dots.measure_strain(free)?;
    if target <= s0 + 1e-9 {
        if target >= s0 - 0.02 {
            // inflation alone already sits at the target
            return Ok(0.0);
        }
        return Err(SimError::Range(format!(
            "strain target {target:.3} is below the inflation floor {s0:.3}"
        )));
    }

    let touch = RigidObstacle::first_touch_height(
        &crate::obstacle::Primitive::for_kind(kind),
        &pose,
        free,
    )?;
    // deepest legal press before the travel stop trips
    let max_disp = (touch - (free.z_b - TRAVEL_FLOOR_M) - 1e-9).max(0.0);
    // probes chain warm starts and run at probe tolerance; only the
    // returned displacement gets a full-tolerance press by the caller
    let mut warm: Option<Vec<f64>> = None;
    let probe_opts = PsorOptions::probe();
    let mut strain_at = |d: f64| -> Result<f64, SimError> {
        let obstacle = RigidObstacle::lowered_onto(kind, pose, free, d)?;
        let (pressed, _, _) =
            press_object_with(free, &obstacle, warm.as_deref(), &probe_opts)?;
        let g = &pressed.grid;
        warm = Some(
            (1..g.ny - 1)
                .flat_map(|j| (1..g.nx - 1).map(move |i| (i, j)))
                .map(|(i, j)| pressed.z[g.index(i, j)])
                .collect(),
        );
        dots.measure_strain(&pressed)
    };
    let s_max = strain_at(max_disp)?;
    if s_max < target {
        return Err(SimError::Range(format!(
            "strain target {target:.3} unreachable: peak {s_max:.3} at the {:.0} mm travel stop",
            max_disp * 1e3
        )));
    }

    let mut lo = 0.0;
    let mut hi = max_disp;
    while hi - lo > 1e-5 {
        let mid = 0.5 * (lo + hi);
        if strain_at(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::MembraneGrid;
    use crate::membrane::{calibrate_pressure, inflate_membrane, TensionField};
    use crate::press::press_object;

    fn inflated_to(apex_gain: f64) -> MembraneState {
        let g = MembraneGrid::default();
        let tension = TensionField::default();
        let p = calibrate_pressure(&g, &tension, 0.3, apex_gain).unwrap();
        inflate_membrane(&g, &tension, p, 0.3).unwrap()
    }

    #[test]
    fn uniformly_scaled_lattice_reads_the_scale_factor() {
        let dots = DotGrid::default();
        let scaled: Vec<Point3<f64>> = (0..dots.dots_y)
            .flat_map(|j| (0..dots.dots_x).map(move |i| (i, j)))
            .map(|(i, j)| Point3::new(1.10 * dots.dot_x(i), 1.10 * dots.dot_y(j), 0.0))
            .collect();
        let s = dots.strain_from_positions(&scaled).unwrap();
        assert!((s - 0.10).abs() < 1e-12, "got {s}");
    }

    #[test]
    fn flat_membrane_has_zero_strain() {
        let g = MembraneGrid::default();
        let m = inflate_membrane(&g, &TensionField::default(), 0.0, 0.3).unwrap();
        let s = DotGrid::default().measure_strain(&m).unwrap();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn inflation_strain_grows_with_apex() {
        let dots = DotGrid::default();
        let s1 = dots.measure_strain(&inflated_to(0.014)).unwrap();
        let s2 = dots.measure_strain(&inflated_to(0.080)).unwrap();
        assert!(s1 > 0.0);
        assert!(s2 > s1);
        // 14 mm apex keeps inflation strain in single digits
        assert!(s1 < 0.10, "low-press inflation floor too high: {s1}");
    }

    #[test]
    fn strain_dips_under_shallow_press_then_climbs() {
        let free = inflated_to(0.014);
        let dots = DotGrid::default();
        let floor = dots.measure_strain(&free).unwrap();
        let strain_at = |d: f64| {
            let obstacle =
                RigidObstacle::lowered_onto(ObjectKind::Cube, ObjectPose::default(), &free, d)
                    .unwrap();
            let (pressed, _, _) = press_object(&free, &obstacle).unwrap();
            dots.measure_strain(&pressed).unwrap()
        };
        let depths = [0.012, 0.024, 0.036, 0.048, 0.060, 0.072];
        let strains: Vec<f64> = depths.iter().map(|d| strain_at(*d)).collect();
        // squashing the dome relaxes the inflation slopes first...
        assert!(
            strains[0] < floor,
            "expected the shallow-press dip: {} vs floor {floor}",
            strains[0]
        );
        // ...then the walls around the deep contact take over and strain
        // climbs monotonically past the floor
        for pair in strains[2..].windows(2) {
            assert!(pair[1] > pair[0], "rising branch broke: {strains:?}");
        }
        assert!(*strains.last().unwrap() > floor);
    }

    #[test]
    fn bisection_hits_the_target_strain() {
        let free = inflated_to(0.014);
        let dots = DotGrid::default();
        let target = 0.25;
        let d = displacement_for_strain(&free, ObjectKind::Cube, ObjectPose::default(), &dots, target)
            .unwrap();
        let obstacle =
            RigidObstacle::lowered_onto(ObjectKind::Cube, ObjectPose::default(), &free, d).unwrap();
        let (pressed, _, _) = press_object(&free, &obstacle).unwrap();
        let s = dots.measure_strain(&pressed).unwrap();
        assert!((s - target).abs() < 5e-3, "reached {s}, wanted {target}");
    }

    #[test]
    fn impossible_target_errors_out() {
        let free = inflated_to(0.014);
        let dots = DotGrid::default();
        let err = displacement_for_strain(
            &free,
            ObjectKind::Cube,
            ObjectPose::default(),
            &dots,
            8.0,
        )
        .unwrap_err();
        assert!(matches!(err, SimError::Range(_)));
    }
}
