//! Matrix-free staggered operators on interior faces.
//!
//! Walls half a cell away are handled with a ghost value. For face averages the
//! ghost `3a − 5/2 b + 1/2 b'` (with `b'` the next face away from the wall) makes
//! the second difference exact on quadratic profiles; when there is no such
//! face the linear ghost `2a − b` is used.

use crate::field::BoundaryData;
use crate::grid::{Dir, FaceKind, MacGrid, Nb};

pub const DIRS: [Dir; 4] = [Dir::East, Dir::West, Dir::North, Dir::South];

pub fn ghost(a: f64, b: f64, opposite: Option<f64>) -> f64 {
    match opposite {
        Some(o) => 3.0 * a - 2.5 * b + 0.5 * o,
        None => 2.0 * a - b,
    }
}

/// `−Δ_h` applied on interior faces (zero elsewhere).
pub fn neg_laplacian(grid: &MacGrid, u: &[f64], v: &[f64], bc: &BoundaryData) -> (Vec<f64>, Vec<f64>) {
    let h2 = grid.delta * grid.delta;
    let mut lu = vec![0.0; u.len()];
    let mut lv = vec![0.0; v.len()];
    for &p in &grid.u_of {
        let b = u[p];
        let mut s = 0.0;
        for d in DIRS {
            s += b - match grid.u_nb(p, d).expect("interior face") {
                Nb::Active(q) => u[q],
                Nb::Wall { sides, opposite } => ghost(bc.u_wall(grid, sides), b, opposite.map(|q| u[q])),
            };
        }
        lu[p] = s / h2;
    }
    for &p in &grid.v_of {
        let b = v[p];
        let mut s = 0.0;
        for d in DIRS {
            s += b - match grid.v_nb(p, d).expect("interior face") {
                Nb::Active(q) => v[q],
                Nb::Wall { sides, opposite } => ghost(bc.v_wall(grid, sides), b, opposite.map(|q| v[q])),
            };
        }
        lv[p] = s / h2;
    }
    (lu, lv)
}

/// Divergence-form convection `∇·(a ⊗ b)`: `a` advects, `b` is transported and
/// takes its wall values from `bbc`.
pub fn convection(
    grid: &MacGrid,
    au: &[f64],
    av: &[f64],
    bu: &[f64],
    bv: &[f64],
    bbc: &BoundaryData,
) -> (Vec<f64>, Vec<f64>) {
    let d = grid.delta;
    let mut cu = vec![0.0; au.len()];
    let mut cv = vec![0.0; av.len()];
    for &p in &grid.u_of {
        let (i, j) = grid.u_ij(p);
        let (e, w) = (grid.u_pos(i + 1, j), grid.u_pos(i - 1, j));
        let ae = 0.5 * (au[p] + au[e]);
        let aw = 0.5 * (au[w] + au[p]);
        let be = 0.5 * (bu[p] + bu[e]);
        let bw = 0.5 * (bu[w] + bu[p]);
        let an = 0.5 * (av[grid.v_pos(i - 1, j + 1)] + av[grid.v_pos(i, j + 1)]);
        let as_ = 0.5 * (av[grid.v_pos(i - 1, j)] + av[grid.v_pos(i, j)]);
        let tb = |dir| match grid.u_nb(p, dir).expect("interior face") {
            Nb::Active(q) => 0.5 * (bu[p] + bu[q]),
            Nb::Wall { sides, .. } => bbc.u_wall(grid, sides),
        };
        cu[p] = (ae * be - aw * bw + an * tb(Dir::North) - as_ * tb(Dir::South)) / d;
    }
    for &p in &grid.v_of {
        let (i, j) = grid.v_ij(p);
        let (n, s) = (grid.v_pos(i, j + 1), grid.v_pos(i, j - 1));
        let an = 0.5 * (av[p] + av[n]);
        let as_ = 0.5 * (av[s] + av[p]);
        let bn = 0.5 * (bv[p] + bv[n]);
        let bs = 0.5 * (bv[s] + bv[p]);
        let ae = 0.5 * (au[grid.u_pos(i + 1, j - 1)] + au[grid.u_pos(i + 1, j)]);
        let aw = 0.5 * (au[grid.u_pos(i, j - 1)] + au[grid.u_pos(i, j)]);
        let tb = |dir| match grid.v_nb(p, dir).expect("interior face") {
            Nb::Active(q) => 0.5 * (bv[p] + bv[q]),
            Nb::Wall { sides, .. } => bbc.v_wall(grid, sides),
        };
        cv[p] = (an * bn - as_ * bs + ae * tb(Dir::East) - aw * tb(Dir::West)) / d;
    }
    (cu, cv)
}

/// Pressure gradient on interior faces.
pub fn gradient(grid: &MacGrid, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = grid.delta;
    let mut gu = vec![0.0; grid.n_u_faces()];
    let mut gv = vec![0.0; grid.n_v_faces()];
    for &f in &grid.u_of {
        let (i, j) = grid.u_ij(f);
        gu[f] = (p[grid.p_pos(i, j)] - p[grid.p_pos(i - 1, j)]) / d;
    }
    for &f in &grid.v_of {
        let (i, j) = grid.v_ij(f);
        gv[f] = (p[grid.p_pos(i, j)] - p[grid.p_pos(i, j - 1)]) / d;
    }
    (gu, gv)
}

/// Divergence on fluid cells (indexed by cell position, zero elsewhere).
pub fn divergence(grid: &MacGrid, u: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_cells()];
    for &c in &grid.p_of {
        let (i, j) = grid.p_ij(c);
        out[c] = (u[grid.u_pos(i + 1, j)] - u[grid.u_pos(i, j)] + v[grid.v_pos(i, j + 1)] - v[grid.v_pos(i, j)])
            / grid.delta;
    }
    out
}

/// Region membership of a face: all of its fluid cells lie in the region.
pub fn face_in_region(cells: [Option<usize>; 2], region: &dyn Fn(usize) -> bool) -> bool {
    cells.iter().flatten().all(|&c| region(c))
}

/// Discrete Dirichlet energy `Σ |∇_h b|² Δ²` over the faces of a region.
///
/// Edges between two faces inside the region count fully (half when both are
/// boundary faces on the same wall line); edges leaving the region count half.
/// Wall edges use the ghost of [`ghost`] and contribute `(b − a)(b − g)`.
pub fn dirichlet_energy(
    grid: &MacGrid,
    u: &[f64],
    v: &[f64],
    bc: &BoundaryData,
    region: &dyn Fn(usize) -> bool,
) -> f64 {
    let mut total = 0.0;
    let kinds_u = &grid.u_kind;
    let kinds_v = &grid.v_kind;
    // Each unordered pair of faces is visited from both ends, so pair terms are
    // halved; wall terms belong to a single face.
    let mut visit = |vals: &[f64],
                     kinds: &[FaceKind],
                     p: usize,
                     in_p: bool,
                     nb: Nb,
                     axial: bool,
                     in_q: &dyn Fn(usize) -> bool,
                     wall: &dyn Fn([usize; 2]) -> f64| {
        let b = vals[p];
        let here_interior = kinds[p] == FaceKind::Interior;
        match nb {
            Nb::Active(q) => {
                let iq = in_q(q);
                if !in_p && !iq {
                    return;
                }
                let both_boundary = !here_interior && kinds[q] != FaceKind::Interior;
                let mut w = if both_boundary && !axial { 0.5 } else { 1.0 };
                if in_p != iq {
                    w *= 0.5;
                }
                let d = b - vals[q];
                total += 0.5 * w * d * d;
            }
            Nb::Wall { sides, opposite } => {
                if !in_p {
                    return;
                }
                let a = wall(sides);
                let g = ghost(a, b, opposite.map(|q| vals[q]));
                let w = if here_interior { 1.0 } else { 0.5 };
                total += w * (b - a) * (b - g);
            }
        }
    };
    let in_u = |q: usize| face_in_region(grid.u_cells(q), region);
    let in_v = |q: usize| face_in_region(grid.v_cells(q), region);
    for p in 0..grid.n_u_faces() {
        if kinds_u[p] == FaceKind::Inactive {
            continue;
        }
        let ip = in_u(p);
        let [l, r] = grid.u_cells(p);
        for d in DIRS {
            // Axial edges run through a fluid cell; only those exist.
            let axial = matches!(d, Dir::East | Dir::West);
            if axial {
                let through = if d == Dir::East { r } else { l };
                if through.is_none() {
                    continue;
                }
            }
            if let Some(nb) = grid.u_nb(p, d) {
                visit(u, kinds_u, p, ip, nb, axial, &in_u, &|s| bc.u_wall(grid, s));
            }
        }
    }
    for p in 0..grid.n_v_faces() {
        if kinds_v[p] == FaceKind::Inactive {
            continue;
        }
        let ip = in_v(p);
        let [b, t] = grid.v_cells(p);
        for d in DIRS {
            let axial = matches!(d, Dir::North | Dir::South);
            if axial {
                let through = if d == Dir::North { t } else { b };
                if through.is_none() {
                    continue;
                }
            }
            if let Some(nb) = grid.v_nb(p, d) {
                visit(v, kinds_v, p, ip, nb, axial, &in_v, &|s| bc.v_wall(grid, s));
            }
        }
    }
    total
}
