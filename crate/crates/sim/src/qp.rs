use crate::error::SimError;
use crate::membrane::Operator;
use serde::{Deserialize, Serialize};

/// First-order optimality summary for an obstacle-problem solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// max(z − φ) over all unknowns; ≤ 0 means feasible.
    pub primal_residual: f64,
    /// Largest |λ| on non-contact nodes plus largest negative λ on
    /// contact nodes, relative to the load scale.
    pub dual_residual: f64,
    /// max |λ · (φ − z)| relative to the load scale.
    pub complementarity: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Tolerances and budget for the projected SOR solver.
#[derive(Debug, Clone, Copy)]
pub struct PsorOptions {
    pub omega: f64,
    pub max_iterations: usize,
    pub kkt_tolerance: f64,
    /// How often (in sweeps) the KKT conditions are evaluated.
    pub check_every: usize,
}

impl Default for PsorOptions {
    fn default() -> Self {
        Self {
            omega: 1.95,
            max_iterations: 20_000,
            kkt_tolerance: 1e-10,
            check_every: 50,
        }
    }
}

impl PsorOptions {
    /// Loose tolerance for throwaway probe solves (e.g. displacement
    /// search), where only coarse geometry matters.
    pub fn probe() -> Self {
        Self {
            kkt_tolerance: 1e-6,
            check_every: 10,
            ..Self::default()
        }
    }
}

/// Solution of min ½·zᵀKz − fᵀz subject to z ≤ φ on the interior unknowns.
#[derive(Debug, Clone)]
pub struct ObstacleSolution {
    /// Interior heights (row-major interior ordering).
    pub z: Vec<f64>,
    /// Multipliers λ = f − Kz; positive where the constraint binds.
    pub lambda: Vec<f64>,
    pub report: KktReport,
}

/// Projected SOR for the upper-obstacle QP. Each sweep relaxes every node
/// with over-relaxation then clips to the obstacle, which keeps the
/// iterate feasible at all times; convergence is certified by an explicit
/// KKT check rather than by the step size.
pub fn solve_obstacle_psor(
    op: &Operator,
    f: &[f64],
    phi: &[f64],
    warm_start: Option<&[f64]>,
    opts: &PsorOptions,
) -> Result<ObstacleSolution, SimError> {
    let n = op.interior_count();
    if f.len() != n || phi.len() != n {
        return Err(SimError::Model("obstacle solve size mismatch".into()));
    }
    if !(0.0 < opts.omega && opts.omega < 2.0) {
        return Err(SimError::Model(format!(
            "SOR relaxation must lie in (0, 2), got {}",
            opts.omega
        )));
    }
    let inx = op.interior_nx();
    let iny = n / inx;

    let mut z: Vec<f64> = match warm_start {
        Some(w) if w.len() == n => w.iter().zip(phi).map(|(a, b)| a.min(*b)).collect(),
        Some(_) => return Err(SimError::Model("warm start size mismatch".into())),
        None => {
            // the cold start must be finite: seeding a sweep with an
            // infinite "no obstacle" sentinel never recovers, because the
            // relaxed update turns NaN and the obstacle clip keeps inf
            let cap = phi
                .iter()
                .cloned()
                .filter(|p| p.is_finite())
                .fold(0.0f64, f64::max);
            phi.iter()
                .map(|&p| if p.is_finite() { p } else { cap })
                .collect()
        }
    };

    let scale = load_scale(op, f);
    let mut iterations = 0;
    let mut last = kkt(op, f, phi, &z, scale, 0);
    if report_ok(&last, opts.kkt_tolerance) {
        let lambda = lambda_of(op, f, &z);
        return Ok(ObstacleSolution {
            z,
            lambda,
            report: KktReport {
                converged: true,
                ..last
            },
        });
    }

    while iterations < opts.max_iterations {
        for _ in 0..opts.check_every {
            iterations += 1;
            for jj in 0..iny {
                for ii in 0..inx {
                    let m = jj * inx + ii;
                    let [e, w, no, s] = op.neighbor[m];
                    let mut acc = f[m];
                    if ii + 1 < inx {
                        acc += e * z[m + 1];
                    }
                    if ii > 0 {
                        acc += w * z[m - 1];
                    }
                    if jj + 1 < iny {
                        acc += no * z[m + inx];
                    }
                    if jj > 0 {
                        acc += s * z[m - inx];
                    }
                    let gs = acc / op.diag[m];
                    let relaxed = z[m] + opts.omega * (gs - z[m]);
                    z[m] = relaxed.min(phi[m]);
                }
            }
            if iterations >= opts.max_iterations {
                break;
            }
        }
        last = kkt(op, f, phi, &z, scale, iterations);
        if report_ok(&last, opts.kkt_tolerance) {
            let lambda = lambda_of(op, f, &z);
            return Ok(ObstacleSolution {
                z,
                lambda,
                report: KktReport {
                    converged: true,
                    ..last
                },
            });
        }
    }

    Err(SimError::Solver {
        message: format!(
            "projected SOR did not reach KKT tolerance {} (dual {}, complementarity {})",
            opts.kkt_tolerance, last.dual_residual, last.complementarity
        ),
        residual: last.dual_residual.max(last.complementarity),
        iterations,
    })
}

pub(crate) fn lambda_of(op: &Operator, f: &[f64], z: &[f64]) -> Vec<f64> {
    let kz = op.apply_reduced(z);
    f.iter().zip(kz).map(|(fi, ki)| fi - ki).collect()
}

pub(crate) fn load_scale(op: &Operator, f: &[f64]) -> f64 {
    let fmax = f.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let dmax = op.diag.iter().fold(0.0f64, |a, b| a.max(*b));
    fmax.max(dmax * 1e-6).max(1e-30)
}

/// Contact test used consistently by solver and report: a node counts as
/// touching when it sits within a hair of the obstacle.
#[inline]
pub(crate) fn touches(z: f64, phi: f64) -> bool {
    phi - z <= 1e-12 * phi.abs().max(1.0)
}

pub(crate) fn kkt(
    op: &Operator,
    f: &[f64],
    phi: &[f64],
    z: &[f64],
    scale: f64,
    iterations: usize,
) -> KktReport {
    // a non-finite residual term means a broken iterate; it must fail the
    // check rather than vanish inside a NaN-ignoring max
    fn worst(acc: f64, term: f64) -> f64 {
        if term.is_finite() {
            acc.max(term)
        } else {
            f64::INFINITY
        }
    }
    let lambda = lambda_of(op, f, z);
    let mut primal = f64::NEG_INFINITY;
    let mut dual = 0.0f64;
    let mut compl_ = 0.0f64;
    for m in 0..z.len() {
        if !phi[m].is_finite() {
            // unconstrained node: only the equilibrium residual applies
            dual = worst(dual, lambda[m].abs() / scale);
            continue;
        }
        primal = worst(primal, z[m] - phi[m]);
        if touches(z[m], phi[m]) {
            // contact: multiplier must be non-negative
            dual = worst(dual, (-lambda[m]).max(0.0) / scale);
        } else {
            // free: equilibrium must hold
            dual = worst(dual, lambda[m].abs() / scale);
        }
        compl_ = worst(compl_, (lambda[m] * (phi[m] - z[m])).abs() / scale);
    }
    if primal == f64::NEG_INFINITY {
        primal = 0.0;
    }
    KktReport {
        primal_residual: primal,
        dual_residual: dual,
        complementarity: compl_,
        iterations,
        converged: false,
    }
}

fn report_ok(r: &KktReport, tol: f64) -> bool {
    r.primal_residual <= 1e-12 && r.dual_residual <= tol && r.complementarity <= tol
}
