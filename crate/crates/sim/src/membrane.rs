use crate::banded::{BandedCholesky, BandedSpd};
use crate::error::SimError;
use crate::grid::MembraneGrid;
use serde::{Deserialize, Serialize};

/// Per-node tension (stiffness) specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TensionField {
    Uniform { value: f64 },
    /// Left half (x < split plane through the center) at `base`, right
    /// half at `base * ratio` — two elastomers cast side by side.
    TwoZone { base: f64, ratio: f64 },
}

impl Default for TensionField {
    fn default() -> Self {
        TensionField::Uniform { value: 100.0 }
    }
}

impl TensionField {
    pub fn sample(&self, grid: &MembraneGrid) -> Vec<f64> {
        match *self {
            TensionField::Uniform { value } => vec![value; grid.node_count()],
            TensionField::TwoZone { base, ratio } => {
                let mut t = vec![base; grid.node_count()];
                for j in 0..grid.ny {
                    for i in 0..grid.nx {
                        if grid.node_x(i) >= grid.center_x {
                            t[grid.index(i, j)] = base * ratio;
                        }
                    }
                }
                t
            }
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let ok = match *self {
            TensionField::Uniform { value } => value > 0.0 && value.is_finite(),
            TensionField::TwoZone { base, ratio } => {
                base > 0.0 && ratio > 0.0 && base.is_finite() && ratio.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(SimError::Model("tension must be positive".into()))
        }
    }
}

/// Height field of the membrane over the camera plane plus everything
/// needed to re-apply its stiffness operator.
#[derive(Debug, Clone)]
pub struct MembraneState {
    pub grid: MembraneGrid,
    /// Height per node, meters above the camera plane.
    pub z: Vec<f64>,
    /// Tension per node.
    pub tension: Vec<f64>,
    /// Chamber pressure (load per unit area, consistent units).
    pub pressure: f64,
    /// Clamped boundary height.
    pub z_b: f64,
}

impl MembraneState {
    pub fn apex(&self) -> f64 {
        self.z.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inflation(&self) -> f64 {
        self.apex() - self.z_b
    }
}

/// Finite-difference coefficients of −∇·(T∇z) on the interior nodes;
/// edge tensions are averaged between the two incident nodes.
#[derive(Debug, Clone)]
pub struct Operator {
    pub grid: MembraneGrid,
    /// Per interior unknown: [east, west, north, south] coupling (all ≥ 0).
    pub neighbor: Vec<[f64; 4]>,
    pub diag: Vec<f64>,
}

impl Operator {
    pub fn interior_nx(&self) -> usize {
        self.grid.nx - 2
    }

    pub fn interior_count(&self) -> usize {
        (self.grid.nx - 2) * (self.grid.ny - 2)
    }

    pub fn new(grid: &MembraneGrid, tension: &[f64]) -> Result<Self, SimError> {
        if grid.nx < 32 || grid.ny < 32 {
            return Err(SimError::Model(format!(
                "grid {}x{} too coarse; need at least 32x32",
                grid.nx, grid.ny
            )));
        }
        if tension.len() != grid.node_count() {
            return Err(SimError::Model("tension field size mismatch".into()));
        }
        if tension.iter().any(|t| *t <= 0.0 || !t.is_finite()) {
            return Err(SimError::Model(
                "tension must be positive everywhere".into(),
            ));
        }
        let inv_hx2 = 1.0 / (grid.hx() * grid.hx());
        let inv_hy2 = 1.0 / (grid.hy() * grid.hy());
        let mut neighbor = Vec::with_capacity((grid.nx - 2) * (grid.ny - 2));
        let mut diag = Vec::with_capacity(neighbor.capacity());
        for j in 1..grid.ny - 1 {
            for i in 1..grid.nx - 1 {
                let t0 = tension[grid.index(i, j)];
                let e = 0.5 * (t0 + tension[grid.index(i + 1, j)]) * inv_hx2;
                let w = 0.5 * (t0 + tension[grid.index(i - 1, j)]) * inv_hx2;
                let n = 0.5 * (t0 + tension[grid.index(i, j + 1)]) * inv_hy2;
                let s = 0.5 * (t0 + tension[grid.index(i, j - 1)]) * inv_hy2;
                neighbor.push([e, w, n, s]);
                diag.push(e + w + n + s);
            }
        }
        Ok(Self {
            grid: *grid,
            neighbor,
            diag,
        })
    }

    /// Interior index of grid node (i, j), both in 1..n-1.
    #[inline]
    pub fn interior_index(&self, i: usize, j: usize) -> usize {
        (j - 1) * (self.grid.nx - 2) + (i - 1)
    }

    /// Applies K to a full-grid field (boundary values read, not written);
    /// returns interior-sized output.
    pub fn apply_full(&self, z: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let mut out = vec![0.0; self.interior_count()];
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let m = self.interior_index(i, j);
                let [e, w, n, s] = self.neighbor[m];
                out[m] = self.diag[m] * z[g.index(i, j)]
                    - e * z[g.index(i + 1, j)]
                    - w * z[g.index(i - 1, j)]
                    - n * z[g.index(i, j + 1)]
                    - s * z[g.index(i, j - 1)];
            }
        }
        out
    }

    /// Applies the reduced (interior-only) stiffness matrix; couplings to
    /// boundary nodes are absent because [`Operator::rhs`] folds them into
    /// the load.
    pub fn apply_reduced(&self, z: &[f64]) -> Vec<f64> {
        let inx = self.interior_nx();
        let iny = self.grid.ny - 2;
        let mut out = vec![0.0; z.len()];
        for jj in 0..iny {
            for ii in 0..inx {
                let m = jj * inx + ii;
                let [e, w, n, s] = self.neighbor[m];
                let mut v = self.diag[m] * z[m];
                if ii + 1 < inx {
                    v -= e * z[m + 1];
                }
                if ii > 0 {
                    v -= w * z[m - 1];
                }
                if jj + 1 < iny {
                    v -= n * z[m + inx];
                }
                if jj > 0 {
                    v -= s * z[m - inx];
                }
                out[m] = v;
            }
        }
        out
    }

    /// Load vector for uniform pressure with the clamped boundary folded in.
    pub fn rhs(&self, pressure: f64, z_b: f64) -> Vec<f64> {
        let g = &self.grid;
        let mut f = vec![pressure; self.interior_count()];
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let m = self.interior_index(i, j);
                let [e, w, n, s] = self.neighbor[m];
                if i + 1 == g.nx - 1 {
                    f[m] += e * z_b;
                }
                if i == 1 {
                    f[m] += w * z_b;
                }
                if j + 1 == g.ny - 1 {
                    f[m] += n * z_b;
                }
                if j == 1 {
                    f[m] += s * z_b;
                }
            }
        }
        f
    }

    /// Assembles the interior stiffness matrix in banded form
    /// (row-major interior ordering, bandwidth nx−2).
    pub fn banded(&self) -> BandedSpd {
        let inx = self.grid.nx - 2;
        let n = self.interior_count();
        let mut a = BandedSpd::zeros(n, inx);
        for m in 0..n {
            let [_, w, _, s] = self.neighbor[m];
            a.set(m, m, self.diag[m]);
            if m % inx != 0 {
                a.set(m, m - 1, -w);
            }
            if m >= inx {
                a.set(m, m - inx, -s);
            }
        }
        a
    }

    pub fn factor(&self) -> Result<BandedCholesky, SimError> {
        self.banded()
            .cholesky()
            .ok_or_else(|| SimError::Model("stiffness matrix not positive definite".into()))
    }

    /// Expands an interior vector to a full-grid field with boundary z_b.
    pub fn expand(&self, interior: &[f64], z_b: f64) -> Vec<f64> {
        let g = &self.grid;
        let mut z = vec![z_b; g.node_count()];
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                z[g.index(i, j)] = interior[self.interior_index(i, j)];
            }
        }
        z
    }
}

/// Solves the clamped pressurized-membrane equation −∇·(T∇z) = p,
/// z = z_b on the boundary, to a relative residual of 1e−10 or better
/// (direct factorization; the residual is verified, not iterated).
pub fn inflate_membrane(
    grid: &MembraneGrid,
    tension: &TensionField,
    pressure: f64,
    z_b: f64,
) -> Result<MembraneState, SimError> {
    if pressure < 0.0 || !pressure.is_finite() {
        return Err(SimError::Model(format!("pressure must be ≥ 0, got {pressure}")));
    }
    tension.validate()?;
    let t = tension.sample(grid);
    let op = Operator::new(grid, &t)?;
    let f = op.rhs(pressure, z_b);
    let interior = op.factor()?.solve(&f);
    let z = op.expand(&interior, z_b);
    verify_residual(&op, &z, pressure, z_b)?;
    Ok(MembraneState {
        grid: *grid,
        z,
        tension: t,
        pressure,
        z_b,
    })
}

fn verify_residual(op: &Operator, z: &[f64], pressure: f64, z_b: f64) -> Result<(), SimError> {
    // apply_full reads the clamped boundary values directly, so the
    // residual is simply Kz − p on every interior node
    let kz = op.apply_full(z);
    let mut worst = 0.0f64;
    for v in &kz {
        worst = worst.max((v - pressure).abs());
    }
    let scale = pressure.abs().max(z_b.abs() * op.diag[0]).max(1e-30);
    let rel = worst / scale;
    if rel > 1e-10 {
        return Err(SimError::Solver {
            message: "membrane solve residual too large".into(),
            residual: rel,
            iterations: 1,
        });
    }
    Ok(())
}

/// Pressure that brings the apex to `z_b + target_inflation`, found by
/// bisection on the (monotone) apex-vs-pressure map. One factorization is
/// reused for every trial solve.
pub fn calibrate_pressure(
    grid: &MembraneGrid,
    tension: &TensionField,
    z_b: f64,
    target_inflation: f64,
) -> Result<f64, SimError> {
    if target_inflation < 0.0 {
        return Err(SimError::Range(format!(
            "target inflation must be ≥ 0, got {target_inflation}"
        )));
    }
    if target_inflation == 0.0 {
        return Ok(0.0);
    }
    tension.validate()?;
    let t = tension.sample(grid);
    let op = Operator::new(grid, &t)?;
    let chol = op.factor()?;
    let apex_for = |p: f64| -> f64 {
        let interior = chol.solve(&op.rhs(p, z_b));
        interior.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - z_b
    };

    let mut hi = 1.0;
    let mut grow = 0;
    while apex_for(hi) < target_inflation {
        hi *= 4.0;
        grow += 1;
        if grow > 60 {
            return Err(SimError::Range(
                "inflation target unreachable at any pressure".into(),
            ));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if apex_for(mid) < target_inflation {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid64() -> MembraneGrid {
        MembraneGrid {
            nx: 64,
            ny: 64,
            ..MembraneGrid::default()
        }
    }

    #[test]
    fn zero_pressure_is_flat() {
        let m = inflate_membrane(&grid64(), &TensionField::default(), 0.0, 0.3).unwrap();
        assert!(m.z.iter().all(|z| (*z - 0.3).abs() < 1e-14));
    }

    #[test]
    fn uniform_solution_is_symmetric_and_peaks_at_center() {
        let g = grid64();
        let m = inflate_membrane(&g, &TensionField::default(), 50.0, 0.3).unwrap();
        let apex = m.apex();
        assert!(apex > 0.3);
        // boundary exact
        for i in 0..g.nx {
            assert_eq!(m.z[g.index(i, 0)], 0.3);
            assert_eq!(m.z[g.index(i, g.ny - 1)], 0.3);
        }
        // reflection symmetry in both axes
        for j in 0..g.ny {
            for i in 0..g.nx {
                let a = m.z[g.index(i, j)];
                let b = m.z[g.index(g.nx - 1 - i, j)];
                let c = m.z[g.index(i, g.ny - 1 - j)];
                assert!((a - b).abs() < 1e-12, "x reflection broke at ({i}, {j})");
                assert!((a - c).abs() < 1e-12, "y reflection broke at ({i}, {j})");
            }
        }
        // interior peak in the middle (even grid: 4 center nodes tie)
        let center = m.z[g.index(g.nx / 2, g.ny / 2)];
        assert!(apex - center < 1e-12);
        assert!(m.z.iter().all(|z| *z >= 0.3 - 1e-14));
    }

    #[test]
    fn doubling_tension_halves_inflation() {
        let g = grid64();
        let m1 = inflate_membrane(&g, &TensionField::Uniform { value: 100.0 }, 80.0, 0.3).unwrap();
        let m2 = inflate_membrane(&g, &TensionField::Uniform { value: 200.0 }, 80.0, 0.3).unwrap();
        assert_relative_eq!(m1.inflation(), 2.0 * m2.inflation(), epsilon = 1e-9);
    }

    #[test]
    fn calibration_hits_apex_target() {
        let g = grid64();
        let target = 0.085;
        let p = calibrate_pressure(&g, &TensionField::default(), 0.3, target).unwrap();
        let m = inflate_membrane(&g, &TensionField::default(), p, 0.3).unwrap();
        assert!((m.inflation() - target).abs() < 1e-9, "got {}", m.inflation());
    }

    #[test]
    fn two_zone_softer_side_bulges_higher() {
        let g = grid64();
        let m = inflate_membrane(
            &g,
            &TensionField::TwoZone {
                base: 100.0,
                ratio: 8.0,
            },
            50.0,
            0.3,
        )
        .unwrap();
        // soft side is x < 0
        let soft_peak = (0..g.ny)
            .flat_map(|j| (0..g.nx / 2).map(move |i| (i, j)))
            .map(|(i, j)| m.z[g.index(i, j)])
            .fold(f64::NEG_INFINITY, f64::max);
        let stiff_peak = (0..g.ny)
            .flat_map(|j| (g.nx / 2..g.nx).map(move |i| (i, j)))
            .map(|(i, j)| m.z[g.index(i, j)])
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(soft_peak > stiff_peak + 1e-4);
    }

    #[test]
    fn rejects_nonpositive_tension() {
        assert!(inflate_membrane(
            &grid64(),
            &TensionField::Uniform { value: 0.0 },
            10.0,
            0.3
        )
        .is_err());
    }

    #[test]
    fn rejects_tiny_grid() {
        let g = MembraneGrid {
            nx: 16,
            ny: 16,
            ..MembraneGrid::default()
        };
        assert!(inflate_membrane(&g, &TensionField::default(), 10.0, 0.3).is_err());
    }
}
