//! Sparse Jacobians of the discrete steady equations.
//!
//! Unknowns are ordered as interior u-faces, interior v-faces, fluid cells.
//! Boundary faces hold data and never appear as columns.

use crate::error::Result;
use crate::field::{BoundaryData, StaggeredField};
use crate::grid::{Dir, MacGrid, Nb, NONE};
use crate::ops::DIRS;
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linearization {
    /// No convection.
    Stokes,
    /// Convection by the frozen state: `C(u₀, ·)`.
    Oseen,
    /// Full derivative `C(·, u₀) + C(u₀, ·)`.
    Newton,
}

struct Row<'g> {
    grid: &'g MacGrid,
    row: usize,
    entries: &'g mut Vec<(usize, usize, f64)>,
}

impl Row<'_> {
    fn u(&mut self, pos: usize, c: f64) {
        let k = self.grid.u_unknown[pos];
        if k != NONE {
            self.entries.push((self.row, k as usize, c));
        }
    }
    fn v(&mut self, pos: usize, c: f64) {
        let k = self.grid.v_unknown[pos];
        if k != NONE {
            self.entries.push((self.row, self.grid.u_of.len() + k as usize, c));
        }
    }
    fn p(&mut self, cell: usize, c: f64) {
        let k = self.grid.p_unknown[cell];
        if k != NONE {
            self.entries.push((self.row, self.grid.u_of.len() + self.grid.v_of.len() + k as usize, c));
        }
    }
}

/// Entries of the Jacobian at `state` (ignored for [`Linearization::Stokes`]).
pub fn jacobian_entries(
    grid: &MacGrid,
    state: &StaggeredField,
    bc: &BoundaryData,
    lin: Linearization,
) -> Vec<(usize, usize, f64)> {
    let d = grid.delta;
    let h2 = d * d;
    let nu = grid.u_of.len();
    let nv = grid.v_of.len();
    let mut entries = Vec::with_capacity(12 * (nu + nv) + 5 * grid.p_of.len());
    let (su, sv) = (&state.u, &state.v);

    for (k, &p) in grid.u_of.iter().enumerate() {
        let mut r = Row { grid, row: k, entries: &mut entries };
        let (i, j) = grid.u_ij(p);
        for dir in DIRS {
            match grid.u_nb(p, dir).expect("interior face") {
                Nb::Active(q) => {
                    r.u(p, 1.0 / h2);
                    r.u(q, -1.0 / h2);
                }
                Nb::Wall { opposite: Some(o), .. } => {
                    r.u(p, 3.5 / h2);
                    r.u(o, -0.5 / h2);
                }
                Nb::Wall { opposite: None, .. } => r.u(p, 2.0 / h2),
            }
        }
        r.p(grid.p_pos(i, j), 1.0 / d);
        r.p(grid.p_pos(i - 1, j), -1.0 / d);
        if lin == Linearization::Stokes {
            continue;
        }
        let newton = lin == Linearization::Newton;
        // Axial edges: A = B̄ = mean of the two u-faces.
        for (q, s) in [(grid.u_pos(i + 1, j), 1.0), (grid.u_pos(i - 1, j), -1.0)] {
            let m = 0.5 * (su[p] + su[q]);
            let c = s * m / d * if newton { 2.0 } else { 1.0 };
            r.u(p, 0.5 * c);
            r.u(q, 0.5 * c);
        }
        // Transverse edges: A from v-faces, B̄ from u-faces or the wall.
        for (dir, jj, s) in [(Dir::North, j + 1, 1.0), (Dir::South, j, -1.0)] {
            let (va, vb) = (grid.v_pos(i - 1, jj), grid.v_pos(i, jj));
            let a0 = 0.5 * (sv[va] + sv[vb]);
            let bbar0 = match grid.u_nb(p, dir).expect("interior face") {
                Nb::Active(q) => {
                    r.u(p, 0.5 * s * a0 / d);
                    r.u(q, 0.5 * s * a0 / d);
                    0.5 * (su[p] + su[q])
                }
                Nb::Wall { sides, .. } => bc.u_wall(grid, sides),
            };
            if newton {
                r.v(va, 0.5 * s * bbar0 / d);
                r.v(vb, 0.5 * s * bbar0 / d);
            }
        }
    }

    for (k, &p) in grid.v_of.iter().enumerate() {
        let mut r = Row { grid, row: nu + k, entries: &mut entries };
        let (i, j) = grid.v_ij(p);
        for dir in DIRS {
            match grid.v_nb(p, dir).expect("interior face") {
                Nb::Active(q) => {
                    r.v(p, 1.0 / h2);
                    r.v(q, -1.0 / h2);
                }
                Nb::Wall { opposite: Some(o), .. } => {
                    r.v(p, 3.5 / h2);
                    r.v(o, -0.5 / h2);
                }
                Nb::Wall { opposite: None, .. } => r.v(p, 2.0 / h2),
            }
        }
        r.p(grid.p_pos(i, j), 1.0 / d);
        r.p(grid.p_pos(i, j - 1), -1.0 / d);
        if lin == Linearization::Stokes {
            continue;
        }
        let newton = lin == Linearization::Newton;
        for (q, s) in [(grid.v_pos(i, j + 1), 1.0), (grid.v_pos(i, j - 1), -1.0)] {
            let m = 0.5 * (sv[p] + sv[q]);
            let c = s * m / d * if newton { 2.0 } else { 1.0 };
            r.v(p, 0.5 * c);
            r.v(q, 0.5 * c);
        }
        for (dir, ii, s) in [(Dir::East, i + 1, 1.0), (Dir::West, i, -1.0)] {
            let (ua, ub) = (grid.u_pos(ii, j - 1), grid.u_pos(ii, j));
            let a0 = 0.5 * (su[ua] + su[ub]);
            let bbar0 = match grid.v_nb(p, dir).expect("interior face") {
                Nb::Active(q) => {
                    r.v(p, 0.5 * s * a0 / d);
                    r.v(q, 0.5 * s * a0 / d);
                    0.5 * (sv[p] + sv[q])
                }
                Nb::Wall { sides, .. } => bc.v_wall(grid, sides),
            };
            if newton {
                r.u(ua, 0.5 * s * bbar0 / d);
                r.u(ub, 0.5 * s * bbar0 / d);
            }
        }
    }

    for (k, &c) in grid.p_of.iter().enumerate() {
        let mut r = Row { grid, row: nu + nv + k, entries: &mut entries };
        if k == grid.pin {
            r.p(c, 1.0);
            continue;
        }
        let (i, j) = grid.p_ij(c);
        r.u(grid.u_pos(i + 1, j), 1.0 / d);
        r.u(grid.u_pos(i, j), -1.0 / d);
        r.v(grid.v_pos(i, j + 1), 1.0 / d);
        r.v(grid.v_pos(i, j), -1.0 / d);
    }
    entries
}

pub fn jacobian(grid: &MacGrid, state: &StaggeredField, bc: &BoundaryData, lin: Linearization) -> Result<SparseMatrix> {
    SparseMatrix::from_entries(grid.n_unknowns(), &jacobian_entries(grid, state, bc, lin))
}

/// The Stokes saddle operator (momentum rows `−Δ + G`, continuity rows `D`,
/// with the pinned pressure row).
pub fn assemble_stokes(grid: &MacGrid) -> Result<SparseMatrix> {
    let zero = StaggeredField::zeros(grid);
    let bc = BoundaryData::zeros(grid);
    jacobian(grid, &zero, &bc, Linearization::Stokes)
}
