//! Nonlinear residual evaluated directly from the stencils, independent of the
//! sparse assembly.

use crate::exact::ResidualNorms;
use crate::field::{BoundaryData, FaceForce, StaggeredField};
use crate::grid::MacGrid;
use crate::ops;

/// Residual in unknown order: u rows, v rows, then continuity rows. The row of
/// the pinned cell holds its pressure instead of the divergence.
pub fn residual_vector(
    grid: &MacGrid,
    field: &StaggeredField,
    bc: &BoundaryData,
    force: &FaceForce,
    convective: bool,
) -> Vec<f64> {
    let (lu, lv) = ops::neg_laplacian(grid, &field.u, &field.v, bc);
    let (gu, gv) = ops::gradient(grid, &field.p);
    let (cu, cv) = if convective {
        ops::convection(grid, &field.u, &field.v, &field.u, &field.v, bc)
    } else {
        (vec![0.0; field.u.len()], vec![0.0; field.v.len()])
    };
    let div = ops::divergence(grid, &field.u, &field.v);
    let mut r = Vec::with_capacity(grid.n_unknowns());
    r.extend(grid.u_of.iter().map(|&p| lu[p] + cu[p] + gu[p] - force.u[p]));
    r.extend(grid.v_of.iter().map(|&p| lv[p] + cv[p] + gv[p] - force.v[p]));
    r.extend(grid.p_of.iter().map(|&c| div[c]));
    let pin = grid.u_of.len() + grid.v_of.len() + grid.pin;
    r[pin] = field.p[grid.p_of[grid.pin]];
    r
}

pub fn norms_of(grid: &MacGrid, r: &[f64]) -> ResidualNorms {
    let nm = grid.u_of.len() + grid.v_of.len();
    let d = grid.delta;
    let pin = nm + grid.pin;
    let mom = &r[..nm];
    let (mut c2, mut cmax) = (0.0f64, 0.0f64);
    for (k, x) in r[nm..].iter().enumerate() {
        if nm + k != pin {
            c2 += x * x;
            cmax = cmax.max(x.abs());
        }
    }
    ResidualNorms {
        momentum: (mom.iter().map(|x| x * x).sum::<f64>()).sqrt() * d,
        continuity: c2.sqrt() * d,
        momentum_max: mom.iter().fold(0.0, |m, x| m.max(x.abs())),
        continuity_max: cmax,
    }
}

/// Momentum and continuity norms (`L²` with cell-area weights, plus maxima).
/// The continuity norm covers every fluid cell, including the pinned one.
pub fn ns_residual(grid: &MacGrid, field: &StaggeredField, bc: &BoundaryData, force: &FaceForce) -> ResidualNorms {
    let r = residual_vector(grid, field, bc, force, true);
    let mut n = norms_of(grid, &r);
    let div = ops::divergence(grid, &field.u, &field.v);
    let pinned = div[grid.p_of[grid.pin]].abs();
    n.continuity = (n.continuity.powi(2) + (pinned * grid.delta).powi(2)).sqrt();
    n.continuity_max = n.continuity_max.max(pinned);
    n
}

pub fn stokes_residual(grid: &MacGrid, field: &StaggeredField, bc: &BoundaryData, force: &FaceForce) -> ResidualNorms {
    let r = residual_vector(grid, field, bc, force, false);
    norms_of(grid, &r)
}
