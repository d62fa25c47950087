//! Nodal stream functions on the MAC lattice.
//!
//! Node `(i, j)` sits at `(x0 + iΔ, y0 + jΔ)`. A u-face joins nodes `(i, j)` and
//! `(i, j+1)` and carries `Δu = χ(i, j+1) − χ(i, j)`; a v-face joins `(i, j)` and
//! `(i+1, j)` and carries `Δv = −(χ(i+1, j) − χ(i, j))`. Fields built this way
//! have zero discrete divergence up to rounding.
//!
//! Around an obstacle with net normal flux the stream function is multivalued.
//! It is made single valued by a cut: a ray from the obstacle to infinity. Faces
//! crossed by the ray carry the obstacle flux as a jump.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::{DomainSpec, Rect};
use crate::grid::{FaceKind, FacePos, MacGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cut {
    pub obstacle: usize,
    /// Vertical ray `x = coord` or horizontal ray `y = coord`.
    pub vertical: bool,
    pub coord: f64,
    /// Start of the ray, inside the obstacle.
    pub start: f64,
    /// `+1` towards increasing coordinate, `−1` otherwise.
    pub sense: f64,
    /// Flux leaving the obstacle into the fluid.
    pub flux: f64,
}

impl Cut {
    /// Winding contribution of a face traversed in its lattice direction, if the
    /// ray crosses it.
    pub fn crossing(&self, grid: &MacGrid, f: FacePos) -> Option<f64> {
        let c = grid.face_center(f);
        let tol = 1e-6 * grid.delta;
        match (f, self.vertical) {
            (FacePos::V(_), true) if (c[0] - self.coord).abs() < tol && (c[1] - self.start) * self.sense > 0.0 => {
                Some(-self.sense)
            }
            (FacePos::U(_), false) if (c[1] - self.coord).abs() < tol && (c[0] - self.start) * self.sense > 0.0 => {
                Some(self.sense)
            }
            _ => None,
        }
    }

    /// Jump of the lattice flux `Δ·(face value along the edge direction)` over
    /// the stream difference, for a crossed face.
    pub fn jump(&self, grid: &MacGrid, f: FacePos) -> f64 {
        self.crossing(grid, f).map_or(0.0, |c| c * self.flux)
    }

    fn hits_rect(&self, r: &Rect) -> bool {
        if self.vertical {
            let inside = self.coord > r.x0 && self.coord < r.x1;
            inside && if self.sense > 0.0 { r.y1 > self.start } else { r.y0 < self.start }
        } else {
            let inside = self.coord > r.y0 && self.coord < r.y1;
            inside && if self.sense > 0.0 { r.x1 > self.start } else { r.x0 < self.start }
        }
    }

    fn meets(&self, o: &Cut) -> bool {
        if self.vertical == o.vertical {
            return (self.coord - o.coord).abs() < 1e-12;
        }
        let (v, h) = if self.vertical { (self, o) } else { (o, self) };
        (h.coord - v.start) * v.sense > 0.0 && (v.coord - h.start) * h.sense > 0.0
    }
}

/// One cut per obstacle with nonzero net flux, along cell-centre lines of the
/// lattice of spacing `delta`, avoiding outlets, other obstacles and other cuts.
pub fn choose_cuts(spec: &DomainSpec, lattice_x0: f64, lattice_y0: f64, delta: f64) -> Result<Vec<Cut>> {
    let mut cuts: Vec<Cut> = Vec::new();
    for (k, o) in spec.obstacles.iter().enumerate() {
        let flux = -o.normal_flux();
        if flux == 0.0 {
            continue;
        }
        let r = o.rect;
        let centres = |lo: f64, hi: f64, origin: f64| {
            let mut v = Vec::new();
            let mut s = ((lo - origin) / delta).floor() as i64;
            loop {
                let c = origin + (s as f64 + 0.5) * delta;
                if c >= hi {
                    break;
                }
                if c > lo {
                    v.push(c);
                }
                s += 1;
            }
            // Prefer lines near the middle of the side.
            let mid = 0.5 * (lo + hi);
            v.sort_by(|a, b| (a - mid).abs().partial_cmp(&(b - mid).abs()).unwrap());
            v
        };
        let xs = centres(r.x0, r.x1, lattice_x0);
        let ys = centres(r.y0, r.y1, lattice_y0);
        let mut candidates = Vec::new();
        for sense in [1.0, -1.0] {
            for &x in &xs {
                candidates.push(Cut { obstacle: k, vertical: true, coord: x, start: 0.5 * (r.y0 + r.y1), sense, flux });
            }
        }
        for sense in [1.0, -1.0] {
            for &y in &ys {
                candidates.push(Cut {
                    obstacle: k,
                    vertical: false,
                    coord: y,
                    start: 0.5 * (r.x0 + r.x1),
                    sense,
                    flux,
                });
            }
        }
        let ok = |c: &Cut| {
            spec.outlets.iter().all(|out| !c.hits_rect(&out.strip(f64::INFINITY)))
                && spec.obstacles.iter().enumerate().all(|(m, ob)| m == k || !c.hits_rect(&ob.rect))
                && cuts.iter().all(|d| !c.meets(d))
        };
        match candidates.into_iter().find(ok) {
            Some(c) => cuts.push(c),
            None => {
                return Err(Error::MalformedDomain(format!(
                    "no straight path from obstacle {k} to infinity avoids the outlets"
                )))
            }
        }
    }
    Ok(cuts)
}

/// Values on the `(nx+1) × (ny+1)` lattice nodes of a grid; `NaN` where no
/// active face touches the node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStream {
    pub nx: usize,
    pub ny: usize,
    pub chi: Vec<f64>,
}

impl NodeStream {
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.chi[self.index(i, j)]
    }
}

/// Nodes joined by a face, in lattice direction.
pub fn face_nodes(grid: &MacGrid, f: FacePos) -> [(usize, usize); 2] {
    match f {
        FacePos::U(p) => {
            let (i, j) = grid.u_ij(p);
            [(i, j), (i, j + 1)]
        }
        FacePos::V(p) => {
            let (i, j) = grid.v_ij(p);
            [(i, j), (i + 1, j)]
        }
    }
}

/// Lattice flux of a face value: `Δu` for u-faces, `−Δv` for v-faces.
pub fn lattice_flux(grid: &MacGrid, f: FacePos, value: f64) -> f64 {
    match f {
        FacePos::U(_) => grid.delta * value,
        FacePos::V(_) => -grid.delta * value,
    }
}

fn active_faces(grid: &MacGrid) -> impl Iterator<Item = FacePos> + '_ {
    (0..grid.n_u_faces())
        .filter(|&p| grid.u_kind[p] != FaceKind::Inactive)
        .map(FacePos::U)
        .chain((0..grid.n_v_faces()).filter(|&p| grid.v_kind[p] != FaceKind::Inactive).map(FacePos::V))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub stream: NodeStream,
    /// Largest mismatch on faces off the spanning tree (the divergence noise of
    /// the input field).
    pub max_mismatch: f64,
}

/// Integrate face values into a nodal stream function by breadth-first search
/// that never crosses a cut; crossed faces are checked against the cut flux.
pub fn stream_from_faces(grid: &MacGrid, u: &[f64], v: &[f64], cuts: &[Cut]) -> Result<Reconstruction> {
    let nn = (grid.nx + 1) * (grid.ny + 1);
    let idx = |i: usize, j: usize| j * (grid.nx + 1) + i;
    let mut adj: Vec<Vec<(usize, FacePos, f64)>> = vec![Vec::new(); nn];
    let value = |f: FacePos| match f {
        FacePos::U(p) => u[p],
        FacePos::V(p) => v[p],
    };
    let mut crossed = Vec::new();
    let mut touched = vec![false; nn];
    for f in active_faces(grid) {
        let [a, b] = face_nodes(grid, f);
        let (a, b) = (idx(a.0, a.1), idx(b.0, b.1));
        touched[a] = true;
        touched[b] = true;
        if let Some((k, c)) = cuts.iter().enumerate().find_map(|(k, cut)| cut.crossing(grid, f).map(|c| (k, c))) {
            crossed.push((a, b, f, k, c));
            continue;
        }
        let d = lattice_flux(grid, f, value(f));
        adj[a].push((b, f, d));
        adj[b].push((a, f, -d));
    }
    let mut chi = vec![f64::NAN; nn];
    let Some(start) = touched.iter().position(|&t| t) else {
        return Err(Error::GridMismatch("grid has no active faces".into()));
    };
    chi[start] = 0.0;
    let mut queue = VecDeque::from([start]);
    while let Some(n) = queue.pop_front() {
        for &(m, _, d) in &adj[n] {
            if chi[m].is_nan() {
                chi[m] = chi[n] + d;
                queue.push_back(m);
            }
        }
    }
    if let Some(n) = (0..nn).find(|&n| touched[n] && chi[n].is_nan()) {
        return Err(Error::MalformedDomain(format!("lattice node {n} is cut off from the rest of the domain")));
    }
    let mut max_mismatch = 0.0f64;
    for (a, list) in adj.iter().enumerate() {
        for &(b, _, d) in list {
            max_mismatch = max_mismatch.max((d - (chi[b] - chi[a])).abs());
        }
    }
    for (a, b, f, k, c) in crossed {
        let cut = &cuts[k];
        let m = lattice_flux(grid, f, value(f)) - (chi[b] - chi[a]);
        let expected = c * cut.flux;
        if (m - expected).abs() > 1e-8 * cut.flux.abs().max(1.0) {
            return Err(Error::ObstacleFluxMismatch { obstacle: cut.obstacle, value: m - expected });
        }
    }
    Ok(Reconstruction { stream: NodeStream { nx: grid.nx, ny: grid.ny, chi }, max_mismatch })
}

/// Face values of the field generated by `chi`, plus the jumps on cut faces.
/// Inactive faces get 0.
pub fn faces_from_stream(grid: &MacGrid, chi: &NodeStream, jump: &dyn Fn(FacePos) -> f64) -> (Vec<f64>, Vec<f64>) {
    let mut u = vec![0.0; grid.n_u_faces()];
    let mut v = vec![0.0; grid.n_v_faces()];
    for f in active_faces(grid) {
        let [a, b] = face_nodes(grid, f);
        let d = chi.at(b.0, b.1) - chi.at(a.0, a.1) + jump(f);
        match f {
            FacePos::U(p) => u[p] = d / grid.delta,
            FacePos::V(p) => v[p] = -d / grid.delta,
        }
    }
    (u, v)
}
