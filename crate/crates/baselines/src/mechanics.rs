use crate::error::BaselineError;
use crate::observe::{observe_membrane_heights, GridObservation};
use crate::rig::RigCalibration;
use contact_core::{
    warp_depth, ContactPatch, DepthImage, PatchSource, PixelMask, PointCloud, INVALID_DEPTH,
};
use membrane_sim::banded::{BandedCholesky, BandedSpd};
use membrane_sim::{GridMask, MembraneGrid, Operator, TensionField};
use nalgebra::Point3;
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Physics and solver settings for the membrane-mechanics estimator.
///
/// The estimator inverts the clamped-membrane equilibrium K z = f − λ
/// for the contact load λ ≥ 0 given observed heights ẑ, minimizing
/// ‖z − ẑ‖²_W + `regularization` · ‖λ / s‖². Substituting the
/// equilibrium makes the objective a near-identity quadratic in the
/// heights, so the unconstrained optimum costs one banded solve against
/// a normal matrix factored once per config; nonnegativity is then
/// enforced by clipping and a short projected-gradient polish whose
/// final KKT residual is reported. The load scale s is the largest
/// stiffness diagonal times the clamp height — the size of the boundary
/// load the clamp folds into the interior. It depends only on this
/// config, never on the frame, so the cached factorization stays valid
/// across chamber pressures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanicsModelConfig {
    pub grid: MembraneGrid,
    pub tension: TensionField,
    pub clamp_height_m: f64,
    /// Ring of interior cells next to the clamp dropped from the data
    /// term and the reported patch; clamp-transition pixels are not
    /// trustworthy height samples.
    pub edge_crop_cells: usize,
    /// Tikhonov weight μ on ‖λ/s‖². Must be positive: it is also what
    /// determines the heights at nodes the data term excludes.
    pub regularization: f64,
    /// Patch threshold as a fraction of chamber pressure: nodes with
    /// λ above ratio · pressure are reported as contact.
    pub lambda_tol_ratio: f64,
    /// Polish budget. On self-consistent data the direct solve lands
    /// within a boundary ring of the optimum and a handful of projected
    /// steps certifies it; frames that still move at this budget are
    /// reported unconverged.
    pub max_iterations: usize,
    /// Convergence bound on the KKT residual: the largest load movement
    /// one more projected-gradient step would make, as a fraction of
    /// the clamp-fold load scale.
    pub kkt_tolerance: f64,
    /// Minimum fraction of interior nodes carrying observations.
    pub min_coverage: f64,
}

impl Default for MechanicsModelConfig {
    fn default() -> Self {
        Self {
            grid: MembraneGrid::default(),
            tension: TensionField::default(),
            clamp_height_m: 0.3,
            edge_crop_cells: 6,
            regularization: 1e-6,
            lambda_tol_ratio: 0.1,
            max_iterations: 12,
            kkt_tolerance: 1e-8,
            min_coverage: 0.9,
        }
    }
}

impl MechanicsModelConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if !(self.clamp_height_m.is_finite() && self.clamp_height_m > 0.0) {
            return Err(BaselineError::Config(format!(
                "clamp height must be positive, got {}",
                self.clamp_height_m
            )));
        }
        let interior = self.grid.nx.min(self.grid.ny).saturating_sub(2);
        if 2 * self.edge_crop_cells >= interior {
            return Err(BaselineError::Config(format!(
                "edge crop of {} cells consumes the whole {}x{} interior",
                self.edge_crop_cells, self.grid.nx, self.grid.ny
            )));
        }
        if !(self.regularization.is_finite() && self.regularization > 0.0) {
            return Err(BaselineError::Config(format!(
                "regularization must be positive, got {}",
                self.regularization
            )));
        }
        if !(self.lambda_tol_ratio.is_finite() && self.lambda_tol_ratio > 0.0) {
            return Err(BaselineError::Config(format!(
                "lambda tolerance ratio must be positive, got {}",
                self.lambda_tol_ratio
            )));
        }
        if self.max_iterations == 0 {
            return Err(BaselineError::Config(
                "iteration limit must be at least 1".into(),
            ));
        }
        if !(self.kkt_tolerance.is_finite() && self.kkt_tolerance > 0.0) {
            return Err(BaselineError::Config(format!(
                "KKT tolerance must be positive, got {}",
                self.kkt_tolerance
            )));
        }
        if !(0.0..=1.0).contains(&self.min_coverage) {
            return Err(BaselineError::Config(format!(
                "coverage bound must lie in [0, 1], got {}",
                self.min_coverage
            )));
        }
        Ok(())
    }
}

/// Solver bookkeeping reported with every estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanicsDiagnostics {
    /// Projected-gradient polish steps taken after the direct solve.
    pub iterations: usize,
    /// Load movement one more projected-gradient step would make at the
    /// returned iterate, relative to the clamp-fold load scale.
    pub kkt_residual: f64,
    /// True when the residual met `kkt_tolerance`.
    pub converged: bool,
    pub active_nodes: usize,
    pub objective: f64,
    pub coverage: f64,
}

/// Node-space result of the inverse solve.
#[derive(Debug, Clone)]
pub struct NodeSolution {
    /// Recovered contact load per interior unknown (row-major interior
    /// ordering), ≥ 0. Crop-ring entries are solved but never reported
    /// in the mask.
    pub lambda: Vec<f64>,
    /// Membrane heights consistent with that load, interior ordering.
    pub heights: Vec<f64>,
    /// Thresholded contact nodes on the full grid.
    pub mask: GridMask,
    pub diagnostics: MechanicsDiagnostics,
}

/// Full estimate: node solution projected back to a pixel mask and patch.
#[derive(Debug, Clone)]
pub struct MechanicsOutput {
    pub patch: ContactPatch,
    pub node_mask: GridMask,
    pub mask: PixelMask,
    pub diagnostics: MechanicsDiagnostics,
    pub elapsed_s: f64,
}

/// Contact estimation by inverting membrane statics. Construction
/// factors both the stiffness operator and the data normal matrix, so
/// building one is expensive and solving frames is cheap; estimates
/// take `&self` and a warmed-up estimator can serve threads in parallel.
pub struct MechanicsEstimator {
    cfg: MechanicsModelConfig,
    op: Operator,
    /// Factor of K itself, for equilibrium heights z(λ).
    stiffness: BandedCholesky,
    /// Factor of W + μ̃K², the height-space normal matrix of the
    /// objective; this is the expensive part of construction.
    normal: BandedCholesky,
    /// Upper estimate of ||K⁻¹||₂, for the polish step size.
    inverse_norm: f64,
    /// Interior unknowns excluded by the edge crop.
    cropped: Vec<bool>,
    load_scale: f64,
    /// `regularization` divided by the squared load scale.
    mu: f64,
}

impl MechanicsEstimator {
    pub fn new(cfg: MechanicsModelConfig) -> Result<Self, BaselineError> {
        cfg.validate()?;
        cfg.tension.validate()?;
        let tension = cfg.tension.sample(&cfg.grid);
        let op = Operator::new(&cfg.grid, &tension)?;
        let stiffness = op.factor()?;
        let inverse_norm = largest_inverse_singular_value(&stiffness, op.interior_count());
        let mut cropped = vec![false; op.interior_count()];
        let crop = cfg.edge_crop_cells;
        for j in 1..cfg.grid.ny - 1 {
            for i in 1..cfg.grid.nx - 1 {
                let inside = i > crop
                    && j > crop
                    && i < cfg.grid.nx - 1 - crop
                    && j < cfg.grid.ny - 1 - crop;
                if !inside {
                    cropped[op.interior_index(i, j)] = true;
                }
            }
        }
        let top_diag = op.diag.iter().cloned().fold(0.0f64, f64::max);
        let load_scale = top_diag * cfg.clamp_height_m;
        let mu = cfg.regularization / (load_scale * load_scale);
        let normal = assemble_normal(&op, &cropped, mu)
            .cholesky()
            .ok_or_else(|| {
                BaselineError::Solver("height-space normal matrix not positive definite".into())
            })?;
        Ok(Self {
            cfg,
            op,
            stiffness,
            normal,
            inverse_norm,
            cropped,
            load_scale,
            mu,
        })
    }

    pub fn config(&self) -> &MechanicsModelConfig {
        &self.cfg
    }

    /// Runs the inverse solve on an already-resampled observation.
    ///
    /// The solve is stateless: the same observation always produces the
    /// same solution.
    pub fn solve_observation(
        &self,
        obs: &GridObservation,
        pressure: f64,
    ) -> Result<NodeSolution, BaselineError> {
        if !(pressure.is_finite() && pressure > 0.0) {
            return Err(BaselineError::Config(format!(
                "chamber pressure must be positive, got {pressure}"
            )));
        }
        let grid = self.cfg.grid;
        if obs.heights.len() != grid.node_count() {
            return Err(BaselineError::Observation(format!(
                "observation covers {} nodes, grid has {}",
                obs.heights.len(),
                grid.node_count()
            )));
        }
        let coverage = obs.interior_coverage(&grid);
        if coverage < self.cfg.min_coverage {
            return Err(BaselineError::Observation(format!(
                "only {:.0}% of interior nodes observed, need {:.0}%",
                100.0 * coverage,
                100.0 * self.cfg.min_coverage
            )));
        }

        let n = self.op.interior_count();
        let f = self.op.rhs(pressure, self.cfg.clamp_height_m);
        // data vector: observed nodes keep their heights, everything else
        // (crop ring, unseen interior) is filled with the zero-load
        // continuation of the observed field, then weighted per the
        // factored normal matrix: 1 outside the crop, 0 on it
        let mut zhat = vec![self.cfg.clamp_height_m; n];
        let mut fixed = vec![false; n];
        let mut weight = vec![0.0f64; n];
        for j in 1..grid.ny - 1 {
            for i in 1..grid.nx - 1 {
                let m = self.op.interior_index(i, j);
                let node = grid.index(i, j);
                if !self.cropped[m] {
                    weight[m] = 1.0;
                    if obs.samples[node] > 0 {
                        zhat[m] = obs.heights[node];
                        fixed[m] = true;
                    }
                }
            }
        }
        self.fill_gaps(&mut zhat, &fixed, &f);

        // unconstrained optimum in height space, then read the load off
        // the equilibrium and clip it to the cone
        let kf = self.op.apply_reduced(&f);
        let mut rhs = vec![0.0f64; n];
        for i in 0..n {
            rhs[i] = weight[i] * zhat[i] + self.mu * kf[i];
        }
        let z_star = self.normal.solve(&rhs);
        let kz = self.op.apply_reduced(&z_star);
        let mut lam: Vec<f64> = (0..n).map(|i| (f[i] - kz[i]).max(0.0)).collect();
        if lam.iter().any(|l| !l.is_finite()) {
            return Err(BaselineError::Solver(
                "direct solve produced non-finite load".into(),
            ));
        }

        // projected-gradient polish: each step's own movement doubles as
        // the KKT residual of the iterate before it, so the loop can stop
        // itself without extra solves
        let step = 1.0 / (2.0 * (1.2 * self.inverse_norm * self.inverse_norm + self.mu));
        let quiet = 0.5 * self.cfg.kkt_tolerance * self.load_scale;
        let lambda_tol = self.cfg.lambda_tol_ratio * pressure;
        let mut iterations = 0usize;
        let mut scratch = vec![0.0f64; n];
        while iterations < self.cfg.max_iterations {
            iterations += 1;
            for i in 0..n {
                scratch[i] = f[i] - lam[i];
            }
            let z = self.stiffness.solve(&scratch);
            for i in 0..n {
                scratch[i] = weight[i] * (z[i] - zhat[i]);
            }
            let back = self.stiffness.solve(&scratch);
            let mut moved = 0.0f64;
            for i in 0..n {
                let g = -2.0 * back[i] + 2.0 * self.mu * lam[i];
                let next = (lam[i] - step * g).max(0.0);
                moved = moved.max((next - lam[i]).abs());
                lam[i] = next;
            }
            if moved <= quiet {
                break;
            }
        }

        let (kkt_residual, objective, heights) =
            self.optimality(&f, &zhat, &weight, &lam, step);
        let converged = kkt_residual <= self.cfg.kkt_tolerance;

        let mut mask = GridMask::new(grid.nx, grid.ny);
        let mut active_nodes = 0usize;
        for j in 1..grid.ny - 1 {
            for i in 1..grid.nx - 1 {
                let m = self.op.interior_index(i, j);
                if !self.cropped[m] && lam[m] > lambda_tol {
                    mask.set(i, j, true);
                    active_nodes += 1;
                }
            }
        }
        Ok(NodeSolution {
            lambda: lam,
            heights,
            mask,
            diagnostics: MechanicsDiagnostics {
                iterations,
                kkt_residual,
                converged,
                active_nodes,
                objective,
                coverage,
            },
        })
    }

    /// Resamples a raw tactile frame and runs the inverse solve, then
    /// projects the node patch back onto the aligned pixel grid.
    pub fn estimate(
        &self,
        tactile: &DepthImage,
        pressure: f64,
        rig: &RigCalibration,
    ) -> Result<MechanicsOutput, BaselineError> {
        let start = Instant::now();
        let obs = observe_membrane_heights(tactile, rig, &self.cfg.grid);
        let node = self.solve_observation(&obs, pressure)?;
        let grid = self.cfg.grid;

        let warped = warp_depth(tactile, &rig.alignment, tactile.dims())?;
        let mut mask = PixelMask::new(warped.width(), warped.height(), false);
        for v in 0..warped.height() {
            for u in 0..warped.width() {
                let d = warped.get(u, v);
                if d == INVALID_DEPTH {
                    continue;
                }
                let p = rig
                    .proximity_intrinsics
                    .unproject(f64::from(u), f64::from(v), f64::from(d));
                if let Some((i, j)) = grid.nearest_node(p.x, p.y) {
                    if node.mask.get(i, j) {
                        mask.set(u, v, true);
                    }
                }
            }
        }

        let mut points = Vec::new();
        for j in 1..grid.ny - 1 {
            for i in 1..grid.nx - 1 {
                if !node.mask.get(i, j) {
                    continue;
                }
                let idx = grid.index(i, j);
                let z = if obs.samples[idx] > 0 {
                    obs.heights[idx]
                } else {
                    node.heights[self.op.interior_index(i, j)]
                };
                points.push(Point3::new(grid.node_x(i), grid.node_y(j), z));
            }
        }
        let patch = if points.is_empty() {
            ContactPatch::empty(PatchSource::MechanicsModel)
        } else {
            ContactPatch::new(PointCloud::new(points)?, PatchSource::MechanicsModel)
        };
        Ok(MechanicsOutput {
            patch,
            node_mask: node.mask,
            mask,
            diagnostics: node.diagnostics,
            elapsed_s: start.elapsed().as_secs_f64(),
        })
    }

    /// Relaxes K z = f over the nodes without observations, holding the
    /// observed ones fixed. The filled values then stand in as data,
    /// which biases unseen regions toward "no contact": absent evidence,
    /// the membrane is where pressure and its surroundings put it.
    fn fill_gaps(&self, zhat: &mut [f64], fixed: &[bool], f: &[f64]) {
        let gaps: Vec<usize> = (0..zhat.len()).filter(|&m| !fixed[m]).collect();
        if gaps.is_empty() {
            return;
        }
        let inx = self.op.interior_nx();
        let iny = self.op.interior_count() / inx;
        let tol = 1e-9 * self.cfg.clamp_height_m;
        for _ in 0..2000 {
            let mut worst = 0.0f64;
            for &m in &gaps {
                let ii = m % inx;
                let jj = m / inx;
                let [e, w, nn, s] = self.op.neighbor[m];
                let mut acc = f[m];
                if ii + 1 < inx {
                    acc += e * zhat[m + 1];
                }
                if ii > 0 {
                    acc += w * zhat[m - 1];
                }
                if jj + 1 < iny {
                    acc += nn * zhat[m + inx];
                }
                if jj > 0 {
                    acc += s * zhat[m - inx];
                }
                let next = acc / self.op.diag[m];
                worst = worst.max((next - zhat[m]).abs());
                zhat[m] = next;
            }
            if worst <= tol {
                break;
            }
        }
    }

    /// KKT residual, objective value, and the height field z(λ) at the
    /// given load. The residual is the largest per-node load change one
    /// more projected-gradient step would make, relative to the
    /// clamp-fold load scale — zero exactly at a constrained stationary
    /// point.
    fn optimality(
        &self,
        f: &[f64],
        zhat: &[f64],
        weight: &[f64],
        lam: &[f64],
        step: f64,
    ) -> (f64, f64, Vec<f64>) {
        let n = lam.len();
        let mut rhs = vec![0.0f64; n];
        for i in 0..n {
            rhs[i] = f[i] - lam[i];
        }
        let z = self.stiffness.solve(&rhs);
        let mut data = 0.0f64;
        for i in 0..n {
            let r = z[i] - zhat[i];
            rhs[i] = weight[i] * r;
            data += weight[i] * r * r;
        }
        let back = self.stiffness.solve(&rhs);
        let mut worst = 0.0f64;
        let mut lam_sq = 0.0f64;
        for i in 0..n {
            let g = -2.0 * back[i] + 2.0 * self.mu * lam[i];
            let moved = (lam[i] - step * g).max(0.0);
            worst = worst.max((lam[i] - moved).abs());
            lam_sq += lam[i] * lam[i];
        }
        (worst / self.load_scale, data + self.mu * lam_sq, z)
    }
}

/// W + μ̃K² on the interior unknowns: the stiffness stencil squared has
/// bandwidth twice the interior row length.
fn assemble_normal(op: &Operator, cropped: &[bool], mu: f64) -> BandedSpd {
    let n = op.interior_count();
    let mut normal = BandedSpd::zeros(n, 2 * op.interior_nx());
    let mut row = Vec::with_capacity(5);
    let mut col = Vec::with_capacity(5);
    for r in 0..n {
        stencil_row(op, r, &mut row);
        for &(k, a) in &row {
            stencil_row(op, k, &mut col);
            for &(c, b) in &col {
                if c <= r {
                    normal.set(r, c, normal.get(r, c) + mu * a * b);
                }
            }
        }
    }
    for (r, &out) in cropped.iter().enumerate() {
        if !out {
            normal.set(r, r, normal.get(r, r) + 1.0);
        }
    }
    normal
}

/// Sparse row r of the reduced stiffness matrix.
fn stencil_row(op: &Operator, r: usize, out: &mut Vec<(usize, f64)>) {
    let inx = op.interior_nx();
    let iny = op.interior_count() / inx;
    let ii = r % inx;
    let jj = r / inx;
    let [e, w, n, s] = op.neighbor[r];
    out.clear();
    out.push((r, op.diag[r]));
    if ii + 1 < inx {
        out.push((r + 1, -e));
    }
    if ii > 0 {
        out.push((r - 1, -w));
    }
    if jj + 1 < iny {
        out.push((r + inx, -n));
    }
    if jj > 0 {
        out.push((r - inx, -s));
    }
}

/// Largest singular value of K⁻¹ (i.e. 1/λ_min of K) by inverse power
/// iteration; deterministic start aligned with the smooth lowest mode.
fn largest_inverse_singular_value(factor: &BandedCholesky, n: usize) -> f64 {
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut estimate = 0.0f64;
    for _ in 0..40 {
        let w = factor.solve(&v);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            break;
        }
        estimate = norm;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
    }
    estimate
}
