//! Steady Stokes and Navier–Stokes solves on a staggered grid.

pub mod assemble;
pub mod residual;

use serde::{Deserialize, Serialize};

use crate::carrier::CarrierMode;
use crate::error::{Error, Result};
use crate::exact::ResidualNorms;
use crate::field::{BoundaryData, FaceForce, StaggeredField};
use crate::grid::{FaceKind, FacePos, MacGrid};
use assemble::{jacobian, Linearization};
use residual::{norms_of, residual_vector};

pub use assemble::assemble_stokes;
pub use residual::ns_residual;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    pub tolerance: f64,
    pub picard_switch: f64,
    pub max_picard: usize,
    pub max_newton: usize,
    /// Number of amplitude steps used when the direct solve fails.
    pub continuation_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tolerance: 1e-10, picard_switch: 1e-3, max_picard: 40, max_newton: 20, continuation_steps: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub stage: &'static str,
    pub iteration: usize,
    pub momentum: f64,
    pub continuity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub field: StaggeredField,
    pub residual: ResidualNorms,
    pub picard_iterations: usize,
    pub newton_iterations: usize,
    pub history: Vec<HistoryEntry>,
}

fn total(n: &ResidualNorms) -> f64 {
    n.momentum.hypot(n.continuity)
}

fn apply(grid: &MacGrid, x: &mut StaggeredField, delta: &[f64], alpha: f64) {
    let nu = grid.u_of.len();
    let nv = grid.v_of.len();
    for (k, &p) in grid.u_of.iter().enumerate() {
        x.u[p] += alpha * delta[k];
    }
    for (k, &p) in grid.v_of.iter().enumerate() {
        x.v[p] += alpha * delta[nu + k];
    }
    for (k, &c) in grid.p_of.iter().enumerate() {
        x.p[c] += alpha * delta[nu + nv + k];
    }
}

/// Reject boundary data whose net flux does not vanish.
pub fn check_boundary_flux(grid: &MacGrid, bc: &BoundaryData) -> Result<()> {
    let net = bc.net_flux(grid);
    let mut scale = 0.0;
    for p in 0..grid.n_u_faces() {
        if grid.u_kind[p] == FaceKind::Boundary {
            scale += bc.u_normal[p].abs() * grid.delta;
        }
    }
    for p in 0..grid.n_v_faces() {
        if grid.v_kind[p] == FaceKind::Boundary {
            scale += bc.v_normal[p].abs() * grid.delta;
        }
    }
    if net.abs() > 1e-10 * f64::max(1.0, scale) {
        return Err(Error::IncompatibleBoundaryFlux(net));
    }
    Ok(())
}

pub fn solve_stokes(grid: &MacGrid, bc: &BoundaryData, force: &FaceForce) -> Result<Outcome> {
    check_boundary_flux(grid, bc)?;
    let mut x = StaggeredField::zeros(grid);
    x.impose(grid, bc);
    let m = jacobian(grid, &x, bc, Linearization::Stokes)?;
    let mut history = Vec::new();
    let mut norms = norms_of(grid, &residual_vector(grid, &x, bc, force, false));
    for it in 0..3 {
        let r = residual_vector(grid, &x, bc, force, false);
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let d = m.solve(&neg)?;
        apply(grid, &mut x, &d, 1.0);
        norms = norms_of(grid, &residual_vector(grid, &x, bc, force, false));
        history.push(HistoryEntry {
            stage: "stokes",
            iteration: it,
            momentum: norms.momentum,
            continuity: norms.continuity,
        });
        if total(&norms) <= 1e-11 * f64::max(1.0, x.max_velocity()) {
            break;
        }
    }
    Ok(Outcome { field: x, residual: norms, picard_iterations: 0, newton_iterations: 0, history })
}

fn iterate(
    grid: &MacGrid,
    bc: &BoundaryData,
    force: &FaceForce,
    x: &mut StaggeredField,
    opts: &SolverOptions,
    history: &mut Vec<HistoryEntry>,
) -> Result<(usize, usize, ResidualNorms)> {
    let mut r = residual_vector(grid, x, bc, force, true);
    let mut norms = norms_of(grid, &r);
    let mut best = total(&norms);
    let mut counts = [0usize; 2];
    for (stage, lin, target, budget) in [
        ("picard", Linearization::Oseen, opts.picard_switch.max(opts.tolerance), opts.max_picard),
        ("newton", Linearization::Newton, opts.tolerance, opts.max_newton),
    ] {
        let slot = if lin == Linearization::Oseen { 0 } else { 1 };
        while total(&norms) > target && counts[slot] < budget {
            counts[slot] += 1;
            let m = jacobian(grid, x, bc, lin)?;
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let d = m.solve(&neg)?;
            let before = total(&norms);
            let mut alpha = 1.0;
            loop {
                let mut trial = x.clone();
                apply(grid, &mut trial, &d, alpha);
                let rt = residual_vector(grid, &trial, bc, force, true);
                let nt = norms_of(grid, &rt);
                if (total(&nt) < before && total(&nt).is_finite()) || alpha < 1.0 / 64.0 {
                    *x = trial;
                    r = rt;
                    norms = nt;
                    break;
                }
                alpha *= 0.5;
            }
            history.push(HistoryEntry {
                stage,
                iteration: counts[slot],
                momentum: norms.momentum,
                continuity: norms.continuity,
            });
            if !total(&norms).is_finite() {
                return Err(Error::NonConvergence { iterations: counts[0] + counts[1], best_residual: best });
            }
            best = best.min(total(&norms));
        }
    }
    if total(&norms) > opts.tolerance {
        return Err(Error::NonConvergence { iterations: counts[0] + counts[1], best_residual: best });
    }
    Ok((counts[0], counts[1], norms))
}

/// Picard then Newton from `init`, with amplitude continuation as a fallback.
pub fn solve_navier_stokes(
    grid: &MacGrid,
    bc: &BoundaryData,
    force: &FaceForce,
    init: &StaggeredField,
    opts: &SolverOptions,
) -> Result<Outcome> {
    check_boundary_flux(grid, bc)?;
    let mut history = Vec::new();
    let mut x = init.clone();
    x.impose(grid, bc);
    match iterate(grid, bc, force, &mut x, opts, &mut history) {
        Ok((pi, ni, residual)) => {
            return Ok(Outcome { field: x, residual, picard_iterations: pi, newton_iterations: ni, history })
        }
        Err(Error::NonConvergence { .. }) if opts.continuation_steps > 1 => {}
        Err(e) => return Err(e),
    }
    let n = opts.continuation_steps;
    let mut x = StaggeredField::zeros(grid);
    let (mut pi, mut ni) = (0, 0);
    let mut last = None;
    for k in 1..=n {
        let s = k as f64 / n as f64;
        let bcs = bc.scale(s);
        let fs = force.scale(s);
        x.impose(grid, &bcs);
        let (a, b, res) = iterate(grid, &bcs, &fs, &mut x, opts, &mut history)?;
        pi += a;
        ni += b;
        last = Some(res);
    }
    let residual = last.expect("at least one continuation step");
    Ok(Outcome { field: x, residual, picard_iterations: pi, newton_iterations: ni, history })
}

/// Carrier restricted to a grid: its face values and the Dirichlet data it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct CarrierSample {
    pub field: StaggeredField,
    pub bc: BoundaryData,
    pub mode: CarrierMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Perturbation `w = u − U` (faces) and the pressure.
    pub w: StaggeredField,
    pub u: StaggeredField,
    pub j: f64,
    pub picard_iterations: usize,
    pub newton_iterations: usize,
    pub residual: ResidualNorms,
    pub mode: CarrierMode,
    pub history: Vec<HistoryEntry>,
}

/// Square root of the discrete Dirichlet energy of a field vanishing on the
/// boundary, over the cells selected by `region`.
pub fn dirichlet_norm(grid: &MacGrid, field: &StaggeredField, region: &dyn Fn(usize) -> bool) -> f64 {
    let zero = BoundaryData::zeros(grid);
    crate::ops::dirichlet_energy(grid, &field.u, &field.v, &zero, region).max(0.0).sqrt()
}

/// Solve for `u = U + w` with the carrier's data, starting from `U + w₀`.
pub fn solve_steady_ns(
    grid: &MacGrid,
    carrier: &CarrierSample,
    force: &FaceForce,
    opts: &SolverOptions,
    w0: Option<&StaggeredField>,
) -> Result<SolveResult> {
    let init = match w0 {
        Some(w) => carrier.field.add(w),
        None => carrier.field.clone(),
    };
    let out = solve_navier_stokes(grid, &carrier.bc, force, &init, opts)?;
    let mut w = out.field.sub(&carrier.field);
    w.p = out.field.p.clone();
    for p in 0..grid.n_u_faces() {
        if grid.face_kind(FacePos::U(p)) != FaceKind::Interior {
            w.u[p] = 0.0;
        }
    }
    for p in 0..grid.n_v_faces() {
        if grid.face_kind(FacePos::V(p)) != FaceKind::Interior {
            w.v[p] = 0.0;
        }
    }
    let j = dirichlet_norm(grid, &w, &|_| true);
    let residual = ns_residual(grid, &out.field, &carrier.bc, force);
    Ok(SolveResult {
        w,
        u: out.field,
        j,
        picard_iterations: out.picard_iterations,
        newton_iterations: out.newton_iterations,
        residual,
        mode: carrier.mode,
        history: out.history,
    })
}
