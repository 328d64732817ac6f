use crate::error::SimError;
use crate::membrane::Operator;
use crate::qp::{kkt, lambda_of, load_scale, KktReport, ObstacleSolution};

/// Controls for the primal-dual active-set solver.
#[derive(Debug, Clone, Copy)]
pub struct PdasOptions {
    pub max_outer: usize,
    pub cg_tolerance: f64,
    pub cg_max_iterations: usize,
}

impl Default for PdasOptions {
    fn default() -> Self {
        Self {
            max_outer: 60,
            cg_tolerance: 1e-12,
            cg_max_iterations: 20_000,
        }
    }
}

/// Primal-dual active-set solve of min ½·zᵀKz − fᵀz s.t. z ≤ φ.
///
/// Independent of the relaxation solver by construction: each outer step
/// pins the guessed contact set to the obstacle, solves the reduced linear
/// system with preconditioned conjugate gradients, and re-guesses the set
/// from λ + c·(z − φ). For this matrix class the set stabilizes in a
/// finite number of steps, giving an exact active set up to CG accuracy.
pub fn solve_obstacle_pdas(
    op: &Operator,
    f: &[f64],
    phi: &[f64],
    opts: &PdasOptions,
) -> Result<ObstacleSolution, SimError> {
    let n = op.interior_count();
    if f.len() != n || phi.len() != n {
        return Err(SimError::Model("obstacle solve size mismatch".into()));
    }
    let c = op.diag.iter().sum::<f64>() / n as f64;

    // start from the unconstrained equilibrium
    let mut active = vec![false; n];
    let mut z = cg_on_free_set(op, f, phi, &active, opts)?;
    let mut lambda = vec![0.0; n];
    let mut outer = 0;
    loop {
        let next: Vec<bool> = (0..n)
            .map(|m| lambda[m] + c * (z[m] - phi[m]) > 0.0)
            .collect();
        if next == active && outer > 0 {
            break;
        }
        outer += 1;
        if outer > opts.max_outer {
            return Err(SimError::Solver {
                message: "active set failed to stabilize".into(),
                residual: f64::NAN,
                iterations: outer,
            });
        }
        active = next;
        z = cg_on_free_set(op, f, phi, &active, opts)?;
        lambda = lambda_of(op, f, &z);
        for m in 0..n {
            if !active[m] {
                lambda[m] = 0.0;
            }
        }
    }

    let scale = load_scale(op, f);
    let report = kkt(op, f, phi, &z, scale, outer);
    let lambda = lambda_of(op, f, &z);
    Ok(ObstacleSolution {
        z,
        lambda,
        report: KktReport {
            converged: true,
            ..report
        },
    })
}

/// Solves K z = f with z pinned to φ on the active set; free components
/// by Jacobi-preconditioned CG.
fn cg_on_free_set(
    op: &Operator,
    f: &[f64],
    phi: &[f64],
    active: &[bool],
    opts: &PdasOptions,
) -> Result<Vec<f64>, SimError> {
    let n = f.len();
    let mut z = vec![0.0; n];
    for m in 0..n {
        if active[m] {
            z[m] = phi[m];
        }
    }
    if active.iter().all(|a| *a) {
        return Ok(z);
    }

    // residual of the free rows with active values substituted
    let kz = op.apply_reduced(&z);
    let mut r: Vec<f64> = (0..n)
        .map(|m| if active[m] { 0.0 } else { f[m] - kz[m] })
        .collect();
    let mut p: Vec<f64> = (0..n).map(|m| r[m] / op.diag[m]).collect();
    let mut zr: f64 = r.iter().zip(&p).map(|(a, b)| a * b).sum();
    let rhs_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);

    let mut x = vec![0.0; n]; // correction on the free set
    for _ in 0..opts.cg_max_iterations {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= opts.cg_tolerance * rhs_norm {
            for m in 0..n {
                if !active[m] {
                    z[m] += x[m];
                }
            }
            return Ok(z);
        }
        let mut ap = op.apply_reduced(&p);
        for m in 0..n {
            if active[m] {
                ap[m] = 0.0;
            }
        }
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(SimError::Solver {
                message: "CG lost positive definiteness".into(),
                residual: rnorm / rhs_norm,
                iterations: 0,
            });
        }
        let alpha = zr / pap;
        for m in 0..n {
            if !active[m] {
                x[m] += alpha * p[m];
                r[m] -= alpha * ap[m];
            }
        }
        let zr_next: f64 = (0..n)
            .filter(|m| !active[*m])
            .map(|m| r[m] * r[m] / op.diag[m])
            .sum();
        let beta = zr_next / zr;
        zr = zr_next;
        for m in 0..n {
            p[m] = if active[m] { 0.0 } else { r[m] / op.diag[m] + beta * p[m] };
        }
    }
    Err(SimError::Solver {
        message: "CG ran out of iterations".into(),
        residual: r.iter().map(|v| v * v).sum::<f64>().sqrt() / rhs_norm,
        iterations: opts.cg_max_iterations,
    })
}
