//! Staggered fields, Dirichlet data and text dumps.

use std::fmt::Write as _;

use crate::exact::CouettePoiseuille;
use crate::geometry::DomainSpec;
use crate::grid::{FaceKind, FacePos, MacGrid, Tag, WallKind};

#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredField {
    /// One value per u-face position (inactive faces hold 0).
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// One value per cell (non-fluid cells hold 0).
    pub p: Vec<f64>,
}

impl StaggeredField {
    pub fn zeros(grid: &MacGrid) -> Self {
        StaggeredField { u: vec![0.0; grid.n_u_faces()], v: vec![0.0; grid.n_v_faces()], p: vec![0.0; grid.n_cells()] }
    }

    pub fn face(&self, f: FacePos) -> f64 {
        match f {
            FacePos::U(p) => self.u[p],
            FacePos::V(p) => self.v[p],
        }
    }

    /// Overwrite boundary faces with the normal data.
    pub fn impose(&mut self, grid: &MacGrid, bc: &BoundaryData) {
        for p in 0..grid.n_u_faces() {
            if grid.u_kind[p] == FaceKind::Boundary {
                self.u[p] = bc.u_normal[p];
            }
        }
        for p in 0..grid.n_v_faces() {
            if grid.v_kind[p] == FaceKind::Boundary {
                self.v[p] = bc.v_normal[p];
            }
        }
    }

    pub fn sub(&self, o: &StaggeredField) -> StaggeredField {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        StaggeredField { u: d(&self.u, &o.u), v: d(&self.v, &o.v), p: d(&self.p, &o.p) }
    }

    pub fn add(&self, o: &StaggeredField) -> StaggeredField {
        let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        StaggeredField { u: d(&self.u, &o.u), v: d(&self.v, &o.v), p: d(&self.p, &o.p) }
    }

    pub fn scale(&self, s: f64) -> StaggeredField {
        let d = |a: &[f64]| a.iter().map(|x| x * s).collect();
        StaggeredField { u: d(&self.u), v: d(&self.v), p: d(&self.p) }
    }

    pub fn max_velocity(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Largest `|div|` over fluid cells.
    pub fn max_divergence(&self, grid: &MacGrid) -> f64 {
        grid.p_of
            .iter()
            .map(|&c| {
                let (i, j) = grid.p_ij(c);
                let d = self.u[grid.u_pos(i + 1, j)] - self.u[grid.u_pos(i, j)] + self.v[grid.v_pos(i, j + 1)]
                    - self.v[grid.v_pos(i, j)];
                (d / grid.delta).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Dirichlet data: normal values on boundary faces, tangential values on the
/// wall segments those faces sit on.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub u_normal: Vec<f64>,
    pub v_normal: Vec<f64>,
    /// x-velocity on horizontal boundary segments, indexed by v-face position.
    pub u_tangent: Vec<f64>,
    /// y-velocity on vertical boundary segments, indexed by u-face position.
    pub v_tangent: Vec<f64>,
}

impl BoundaryData {
    pub fn zeros(grid: &MacGrid) -> Self {
        BoundaryData {
            u_normal: vec![0.0; grid.n_u_faces()],
            v_normal: vec![0.0; grid.n_v_faces()],
            u_tangent: vec![0.0; grid.n_v_faces()],
            v_tangent: vec![0.0; grid.n_u_faces()],
        }
    }

    /// Set the full velocity `a` on a boundary face.
    pub fn set(&mut self, f: FacePos, a: [f64; 2]) {
        match f {
            FacePos::U(p) => {
                self.u_normal[p] = a[0];
                self.v_tangent[p] = a[1];
            }
            FacePos::V(p) => {
                self.v_normal[p] = a[1];
                self.u_tangent[p] = a[0];
            }
        }
    }

    /// Tangential x-velocity on a horizontal wall bounded by the given v-faces.
    pub fn u_wall(&self, grid: &MacGrid, sides: [usize; 2]) -> f64 {
        mean_on_boundary(sides, |p| grid.v_kind[p] == FaceKind::Boundary, |p| self.u_tangent[p])
    }

    /// Tangential y-velocity on a vertical wall bounded by the given u-faces.
    pub fn v_wall(&self, grid: &MacGrid, sides: [usize; 2]) -> f64 {
        mean_on_boundary(sides, |p| grid.u_kind[p] == FaceKind::Boundary, |p| self.v_tangent[p])
    }

    pub fn scale(&self, s: f64) -> BoundaryData {
        let d = |a: &[f64]| a.iter().map(|x| x * s).collect();
        BoundaryData {
            u_normal: d(&self.u_normal),
            v_normal: d(&self.v_normal),
            u_tangent: d(&self.u_tangent),
            v_tangent: d(&self.v_tangent),
        }
    }

    /// Net outward flux through all boundary faces.
    pub fn net_flux(&self, grid: &MacGrid) -> f64 {
        let mut s = 0.0;
        for p in 0..grid.n_u_faces() {
            if grid.u_kind[p] == FaceKind::Boundary {
                s += grid.boundary_normal(FacePos::U(p))[0] * self.u_normal[p];
            }
        }
        for p in 0..grid.n_v_faces() {
            if grid.v_kind[p] == FaceKind::Boundary {
                s += grid.boundary_normal(FacePos::V(p))[1] * self.v_normal[p];
            }
        }
        s * grid.delta
    }

    /// Wall data from the domain; `cap` gives the velocity on cap faces.
    pub fn from_domain(grid: &MacGrid, spec: &DomainSpec, cap: impl Fn(usize, FacePos) -> [f64; 2]) -> BoundaryData {
        let mut bc = BoundaryData::zeros(grid);
        let faces = (0..grid.n_u_faces()).map(FacePos::U).chain((0..grid.n_v_faces()).map(FacePos::V));
        for f in faces {
            let Some(tag) = grid.face_tag(f) else { continue };
            let a = match tag {
                Tag::Cap(j) => cap(j, f),
                Tag::Wall(w) => wall_velocity(grid, spec, f, w),
            };
            bc.set(f, a);
        }
        bc
    }
}

fn mean_on_boundary(sides: [usize; 2], ok: impl Fn(usize) -> bool, val: impl Fn(usize) -> f64) -> f64 {
    let mut s = 0.0;
    let mut n = 0;
    for p in sides {
        if p != usize::MAX && ok(p) {
            s += val(p);
            n += 1;
        }
    }
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

pub fn wall_velocity(grid: &MacGrid, spec: &DomainSpec, f: FacePos, w: WallKind) -> [f64; 2] {
    let slip = |j: usize, side: u8| {
        let o = &spec.outlets[j];
        let b = o.slip[side as usize];
        let e = o.e1();
        [b * e[0], b * e[1]]
    };
    match w {
        WallKind::Core { continuation: Some((j, s)) } => slip(j, s),
        WallKind::Core { continuation: None } | WallKind::Box(_) => [0.0, 0.0],
        WallKind::Override(k) => spec.core_walls[k].data.velocity(grid.boundary_normal(f)),
        WallKind::Outlet { j, side } => slip(j, side),
        WallKind::Obstacle { i, side } => spec.obstacles[i].side(side).velocity(side.obstacle_normal()),
    }
}

/// Body force sampled at face centres.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceForce {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl FaceForce {
    pub fn zero(grid: &MacGrid) -> Self {
        FaceForce { u: vec![0.0; grid.n_u_faces()], v: vec![0.0; grid.n_v_faces()] }
    }

    pub fn sample(grid: &MacGrid, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        FaceForce {
            u: (0..grid.n_u_faces()).map(|p| f(grid.u_center(p))[0]).collect(),
            v: (0..grid.n_v_faces()).map(|p| f(grid.v_center(p))[1]).collect(),
        }
    }

    /// Constant force restricted to a window `[x0, x1] × [y0, y1]`.
    pub fn uniform(grid: &MacGrid, value: [f64; 2], window: Option<[f64; 4]>) -> Self {
        FaceForce::sample(grid, |z| match window {
            Some(w) if !(z[0] >= w[0] && z[0] <= w[2] && z[1] >= w[1] && z[1] <= w[3]) => [0.0, 0.0],
            _ => value,
        })
    }

    pub fn scale(&self, s: f64) -> FaceForce {
        FaceForce { u: self.u.iter().map(|x| x * s).collect(), v: self.v.iter().map(|x| x * s).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.u.iter().chain(&self.v).all(|&x| x == 0.0)
    }
}

/// Sampled Couette–Poiseuille state on a box grid of height `cp.h`, with the
/// matching wall and end data.
pub fn channel_cp_state(grid: &MacGrid, cp: &CouettePoiseuille) -> (StaggeredField, BoundaryData) {
    let d = grid.delta;
    let mut field = StaggeredField::zeros(grid);
    let mut bc = BoundaryData::zeros(grid);
    for p in 0..grid.n_u_faces() {
        let (_, j) = grid.u_ij(p);
        let y = j as f64 * d;
        field.u[p] = cp.cell_average(y, y + d);
        if grid.u_kind[p] == FaceKind::Boundary {
            bc.u_normal[p] = field.u[p];
        }
    }
    for p in 0..grid.n_v_faces() {
        let (_, j) = grid.v_ij(p);
        if grid.v_kind[p] == FaceKind::Boundary {
            bc.u_tangent[p] = if j == 0 { cp.b0 } else { cp.b1 };
        }
    }
    for c in &grid.p_of {
        let x = grid.p_center(*c)[0] - grid.x0;
        field.p[*c] = cp.pressure_slope() * x;
    }
    (field, bc)
}

/// Text dump: a header line, then each array as a titled block of rows.
pub fn dump(grid: &MacGrid, field: &StaggeredField) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nx={} ny={} delta={} layout=mac-u-v-p", grid.nx, grid.ny, grid.delta);
    let block = |s: &mut String, name: &str, w: usize, h: usize, data: &[f64]| {
        let _ = writeln!(s, "{name} {w} {h}");
        for j in 0..h {
            let row: Vec<String> = (0..w).map(|i| format!("{:.17e}", data[j * w + i])).collect();
            let _ = writeln!(s, "{}", row.join(" "));
        }
    };
    block(&mut s, "u", grid.nx + 1, grid.ny, &field.u);
    block(&mut s, "v", grid.nx, grid.ny + 1, &field.v);
    block(&mut s, "p", grid.nx, grid.ny, &field.p);
    s
}

/// Inverse of [`dump`].
pub fn parse_dump(text: &str) -> Option<(usize, usize, f64, StaggeredField)> {
    let mut lines = text.lines();
    let head = lines.next()?;
    let mut nx = None;
    let mut ny = None;
    let mut delta = None;
    for tok in head.split_whitespace() {
        if let Some(v) = tok.strip_prefix("nx=") {
            nx = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("ny=") {
            ny = v.parse().ok();
        } else if let Some(v) = tok.strip_prefix("delta=") {
            delta = v.parse().ok();
        }
    }
    let mut arrays = Vec::new();
    for _ in 0..3 {
        let title = lines.next()?;
        let mut it = title.split_whitespace().skip(1);
        let w: usize = it.next()?.parse().ok()?;
        let h: usize = it.next()?.parse().ok()?;
        let mut data = Vec::with_capacity(w * h);
        for _ in 0..h {
            for x in lines.next()?.split_whitespace() {
                data.push(x.parse().ok()?);
            }
        }
        arrays.push(data);
    }
    let p = arrays.pop()?;
    let v = arrays.pop()?;
    let u = arrays.pop()?;
    Some((nx?, ny?, delta?, StaggeredField { u, v, p }))
}
