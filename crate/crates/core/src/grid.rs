//! Staggered (MAC) grid over a truncated domain.
//!
//! u-face `(i, j)` sits at `x = x0 + iΔ` between cells `(i-1, j)` and `(i, j)`;
//! v-face `(i, j)` sits at `y = y0 + jΔ` between cells `(i, j-1)` and `(i, j)`.
//! Velocity values are face averages.

use crate::error::{Error, Result};
use crate::geometry::{Region, Side, TruncatedDomain};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Outside,
    Solid(usize),
    Core,
    /// Outlet `j`, local column `m` covering `x_j ∈ [mΔ, (m+1)Δ]`.
    Outlet {
        j: usize,
        m: usize,
    },
}

impl Cell {
    pub fn is_fluid(self) -> bool {
        matches!(self, Cell::Core | Cell::Outlet { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Inactive,
    Interior,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallKind {
    /// Core wall, optionally continuing wall `side` of outlet `j` from its mouth.
    Core {
        continuation: Option<(usize, u8)>,
    },
    Override(usize),
    Outlet {
        j: usize,
        side: u8,
    },
    Obstacle {
        i: usize,
        side: Side,
    },
    Box(Side),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Wall(WallKind),
    Cap(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FacePos {
    U(usize),
    V(usize),
}

/// Neighbour of a face in one of the four directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nb {
    /// An interior or boundary face of the same component.
    Active(usize),
    /// A wall half a cell away. `sides` hold the tangential wall data (faces of
    /// the other component), `opposite` the active face on the far side.
    Wall { sides: [usize; 2], opposite: Option<usize> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    East,
    West,
    North,
    South,
}

pub const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct MacGrid {
    pub delta: f64,
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub cells: Vec<Cell>,
    pub u_kind: Vec<FaceKind>,
    pub v_kind: Vec<FaceKind>,
    pub u_tag: Vec<Option<Tag>>,
    pub v_tag: Vec<Option<Tag>>,
    pub u_unknown: Vec<u32>,
    pub v_unknown: Vec<u32>,
    pub p_unknown: Vec<u32>,
    pub u_of: Vec<usize>,
    pub v_of: Vec<usize>,
    pub p_of: Vec<usize>,
    /// Pressure unknown held at zero.
    pub pin: usize,
}

fn commensurate(x: f64, d: f64) -> bool {
    let s = x / d;
    (s - s.round()).abs() <= 1e-9 * s.abs().max(1.0)
}

impl MacGrid {
    pub fn u_pos(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }
    pub fn v_pos(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    pub fn p_pos(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }
    pub fn u_ij(&self, pos: usize) -> (usize, usize) {
        (pos % (self.nx + 1), pos / (self.nx + 1))
    }
    pub fn v_ij(&self, pos: usize) -> (usize, usize) {
        (pos % self.nx, pos / self.nx)
    }
    pub fn p_ij(&self, pos: usize) -> (usize, usize) {
        (pos % self.nx, pos / self.nx)
    }
    pub fn n_u_faces(&self) -> usize {
        (self.nx + 1) * self.ny
    }
    pub fn n_v_faces(&self) -> usize {
        self.nx * (self.ny + 1)
    }
    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }
    pub fn n_fluid_cells(&self) -> usize {
        self.p_of.len()
    }
    pub fn n_unknowns(&self) -> usize {
        self.u_of.len() + self.v_of.len() + self.p_of.len()
    }

    pub fn cell(&self, i: isize, j: isize) -> Cell {
        if i < 0 || j < 0 || i as usize >= self.nx || j as usize >= self.ny {
            Cell::Outside
        } else {
            self.cells[j as usize * self.nx + i as usize]
        }
    }

    pub fn fluid(&self, i: isize, j: isize) -> bool {
        self.cell(i, j).is_fluid()
    }

    pub fn u_center(&self, pos: usize) -> [f64; 2] {
        let (i, j) = self.u_ij(pos);
        [self.x0 + i as f64 * self.delta, self.y0 + (j as f64 + 0.5) * self.delta]
    }
    pub fn v_center(&self, pos: usize) -> [f64; 2] {
        let (i, j) = self.v_ij(pos);
        [self.x0 + (i as f64 + 0.5) * self.delta, self.y0 + j as f64 * self.delta]
    }
    pub fn p_center(&self, pos: usize) -> [f64; 2] {
        let (i, j) = self.p_ij(pos);
        [self.x0 + (i as f64 + 0.5) * self.delta, self.y0 + (j as f64 + 0.5) * self.delta]
    }
    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x0 + i as f64 * self.delta, self.y0 + j as f64 * self.delta]
    }

    /// Fluid cells adjacent to a u-face (left, right).
    pub fn u_cells(&self, pos: usize) -> [Option<usize>; 2] {
        let (i, j) = self.u_ij(pos);
        let l = (i > 0 && self.fluid(i as isize - 1, j as isize)).then(|| self.p_pos(i - 1, j));
        let r = (i < self.nx && self.fluid(i as isize, j as isize)).then(|| self.p_pos(i, j));
        [l, r]
    }

    /// Fluid cells adjacent to a v-face (below, above).
    pub fn v_cells(&self, pos: usize) -> [Option<usize>; 2] {
        let (i, j) = self.v_ij(pos);
        let b = (j > 0 && self.fluid(i as isize, j as isize - 1)).then(|| self.p_pos(i, j - 1));
        let t = (j < self.ny && self.fluid(i as isize, j as isize)).then(|| self.p_pos(i, j));
        [b, t]
    }

    pub fn face_cells(&self, f: FacePos) -> [Option<usize>; 2] {
        match f {
            FacePos::U(p) => self.u_cells(p),
            FacePos::V(p) => self.v_cells(p),
        }
    }

    pub fn face_kind(&self, f: FacePos) -> FaceKind {
        match f {
            FacePos::U(p) => self.u_kind[p],
            FacePos::V(p) => self.v_kind[p],
        }
    }

    pub fn face_tag(&self, f: FacePos) -> Option<Tag> {
        match f {
            FacePos::U(p) => self.u_tag[p],
            FacePos::V(p) => self.v_tag[p],
        }
    }

    pub fn face_center(&self, f: FacePos) -> [f64; 2] {
        match f {
            FacePos::U(p) => self.u_center(p),
            FacePos::V(p) => self.v_center(p),
        }
    }

    /// Outward normal of the fluid at a boundary face.
    pub fn boundary_normal(&self, f: FacePos) -> [f64; 2] {
        let [a, _] = self.face_cells(f);
        match f {
            FacePos::U(_) => {
                if a.is_some() {
                    [1.0, 0.0]
                } else {
                    [-1.0, 0.0]
                }
            }
            FacePos::V(_) => {
                if a.is_some() {
                    [0.0, 1.0]
                } else {
                    [0.0, -1.0]
                }
            }
        }
    }

    /// The face whose midpoint is `z`, if any.
    pub fn face_at(&self, z: [f64; 2]) -> Option<FacePos> {
        let fx = (z[0] - self.x0) / self.delta;
        let fy = (z[1] - self.y0) / self.delta;
        let near = |s: f64| (s - s.round()).abs() < 1e-6;
        let half = |s: f64| (s - 0.5 - (s - 0.5).round()).abs() < 1e-6;
        if near(fx) && half(fy) {
            let i = fx.round() as isize;
            let j = (fy - 0.5).round() as isize;
            if i >= 0 && j >= 0 && (i as usize) <= self.nx && (j as usize) < self.ny {
                return Some(FacePos::U(self.u_pos(i as usize, j as usize)));
            }
        } else if half(fx) && near(fy) {
            let i = (fx - 0.5).round() as isize;
            let j = fy.round() as isize;
            if i >= 0 && j >= 0 && (i as usize) < self.nx && (j as usize) <= self.ny {
                return Some(FacePos::V(self.v_pos(i as usize, j as usize)));
            }
        }
        None
    }

    /// Cell containing the point `z`, if inside the grid.
    pub fn cell_at(&self, z: [f64; 2]) -> Option<usize> {
        let i = ((z[0] - self.x0) / self.delta).floor();
        let j = ((z[1] - self.y0) / self.delta).floor();
        (i >= 0.0 && j >= 0.0 && (i as usize) < self.nx && (j as usize) < self.ny)
            .then(|| self.p_pos(i as usize, j as usize))
    }

    fn u_active(&self, i: isize, j: isize) -> Option<usize> {
        if i < 0 || j < 0 || i as usize > self.nx || j as usize >= self.ny {
            return None;
        }
        let p = self.u_pos(i as usize, j as usize);
        (self.u_kind[p] != FaceKind::Inactive).then_some(p)
    }

    fn v_active(&self, i: isize, j: isize) -> Option<usize> {
        if i < 0 || j < 0 || i as usize >= self.nx || j as usize > self.ny {
            return None;
        }
        let p = self.v_pos(i as usize, j as usize);
        (self.v_kind[p] != FaceKind::Inactive).then_some(p)
    }

    /// Neighbour of u-face `pos` in direction `d`. Valid for active faces; for
    /// interior faces the east/west neighbours are always active.
    pub fn u_nb(&self, pos: usize, d: Dir) -> Option<Nb> {
        let (i, j) = self.u_ij(pos);
        let (i, j) = (i as isize, j as isize);
        let vside = |jj: isize| {
            // v-faces on the horizontal line y = y0 + jj Δ on either side of x_i.
            let a = if i > 0 { self.v_pos(i as usize - 1, jj as usize) } else { usize::MAX };
            let b = if (i as usize) < self.nx { self.v_pos(i as usize, jj as usize) } else { usize::MAX };
            [a, b]
        };
        match d {
            Dir::East => self.u_active(i + 1, j).map(Nb::Active),
            Dir::West => self.u_active(i - 1, j).map(Nb::Active),
            Dir::North => Some(match self.u_active(i, j + 1) {
                Some(p) => Nb::Active(p),
                None => Nb::Wall { sides: vside(j + 1), opposite: self.u_active(i, j - 1) },
            }),
            Dir::South => Some(match self.u_active(i, j - 1) {
                Some(p) => Nb::Active(p),
                None => Nb::Wall { sides: vside(j), opposite: self.u_active(i, j + 1) },
            }),
        }
    }

    pub fn v_nb(&self, pos: usize, d: Dir) -> Option<Nb> {
        let (i, j) = self.v_ij(pos);
        let (i, j) = (i as isize, j as isize);
        let uside = |ii: isize| {
            let a = if j > 0 { self.u_pos(ii as usize, j as usize - 1) } else { usize::MAX };
            let b = if (j as usize) < self.ny { self.u_pos(ii as usize, j as usize) } else { usize::MAX };
            [a, b]
        };
        match d {
            Dir::North => self.v_active(i, j + 1).map(Nb::Active),
            Dir::South => self.v_active(i, j - 1).map(Nb::Active),
            Dir::East => Some(match self.v_active(i + 1, j) {
                Some(p) => Nb::Active(p),
                None => Nb::Wall { sides: uside(i + 1), opposite: self.v_active(i - 1, j) },
            }),
            Dir::West => Some(match self.v_active(i - 1, j) {
                Some(p) => Nb::Active(p),
                None => Nb::Wall { sides: uside(i), opposite: self.v_active(i + 1, j) },
            }),
        }
    }

    /// Build a grid from cell classes and a boundary tagger.
    fn from_cells(
        delta: f64,
        nx: usize,
        ny: usize,
        x0: f64,
        y0: f64,
        cells: Vec<Cell>,
        tag: impl Fn(&MacGrid, FacePos) -> Tag,
    ) -> Result<MacGrid> {
        let mut g = MacGrid {
            delta,
            nx,
            ny,
            x0,
            y0,
            cells,
            u_kind: Vec::new(),
            v_kind: Vec::new(),
            u_tag: Vec::new(),
            v_tag: Vec::new(),
            u_unknown: Vec::new(),
            v_unknown: Vec::new(),
            p_unknown: Vec::new(),
            u_of: Vec::new(),
            v_of: Vec::new(),
            p_of: Vec::new(),
            pin: 0,
        };
        let kind = |a: bool, b: bool| match (a, b) {
            (true, true) => FaceKind::Interior,
            (false, false) => FaceKind::Inactive,
            _ => FaceKind::Boundary,
        };
        g.u_kind = (0..g.n_u_faces())
            .map(|p| {
                let [a, b] = g.u_cells(p);
                kind(a.is_some(), b.is_some())
            })
            .collect();
        g.v_kind = (0..g.n_v_faces())
            .map(|p| {
                let [a, b] = g.v_cells(p);
                kind(a.is_some(), b.is_some())
            })
            .collect();
        g.u_tag =
            (0..g.n_u_faces()).map(|p| (g.u_kind[p] == FaceKind::Boundary).then(|| tag(&g, FacePos::U(p)))).collect();
        g.v_tag =
            (0..g.n_v_faces()).map(|p| (g.v_kind[p] == FaceKind::Boundary).then(|| tag(&g, FacePos::V(p)))).collect();
        let number = |kinds: &[FaceKind]| {
            let mut map = vec![NONE; kinds.len()];
            let mut of = Vec::new();
            for (p, k) in kinds.iter().enumerate() {
                if *k == FaceKind::Interior {
                    map[p] = of.len() as u32;
                    of.push(p);
                }
            }
            (map, of)
        };
        (g.u_unknown, g.u_of) = number(&g.u_kind);
        (g.v_unknown, g.v_of) = number(&g.v_kind);
        let mut pmap = vec![NONE; g.n_cells()];
        let mut pof = Vec::new();
        for (p, c) in g.cells.iter().enumerate() {
            if c.is_fluid() {
                pmap[p] = pof.len() as u32;
                pof.push(p);
            }
        }
        if pof.is_empty() {
            return Err(Error::GridMismatch("grid has no fluid cells".into()));
        }
        g.pin = pof.iter().position(|&p| g.cells[p] == Cell::Core).unwrap_or(0);
        g.p_unknown = pmap;
        g.p_of = pof;
        Ok(g)
    }

    /// Box `[0, nxΔ] × [0, nyΔ]` filled with fluid.
    pub fn rectangle(nx: usize, ny: usize, delta: f64) -> Result<MacGrid> {
        if nx == 0 || ny == 0 || !(delta > 0.0) {
            return Err(Error::GridMismatch(format!("bad box {nx} x {ny} at {delta}")));
        }
        MacGrid::from_cells(delta, nx, ny, 0.0, 0.0, vec![Cell::Core; nx * ny], |g, f| {
            let side = match f {
                FacePos::U(p) => {
                    if g.u_ij(p).0 == 0 {
                        Side::Left
                    } else {
                        Side::Right
                    }
                }
                FacePos::V(p) => {
                    if g.v_ij(p).1 == 0 {
                        Side::Bottom
                    } else {
                        Side::Top
                    }
                }
            };
            Tag::Wall(WallKind::Box(side))
        })
    }

    /// Local abscissa of the centre of a cell, for outlet cells.
    pub fn outlet_x(&self, cell: usize) -> Option<(usize, f64)> {
        match self.cells[cell] {
            Cell::Outlet { j, m } => Some((j, (m as f64 + 0.5) * self.delta)),
            _ => None,
        }
    }

    /// Whether a fluid cell lies in `Ω^t`.
    pub fn cell_in_truncation(&self, cell: usize, t: f64) -> bool {
        match self.cells[cell] {
            Cell::Core => true,
            Cell::Outlet { m, .. } => ((m as f64 + 0.5) * self.delta) < t,
            _ => false,
        }
    }

    /// Lattice index of the grid origin, in units of `Δ`.
    pub fn lattice_origin(&self) -> (i64, i64) {
        ((self.x0 / self.delta).round() as i64, (self.y0 / self.delta).round() as i64)
    }

    /// Text mask: one row per cell row from the top, `#` solid, `.` outside,
    /// `C` core and the outlet index for outlet cells.
    pub fn mask_csv(&self) -> String {
        let mut s = String::from("row,cells\n");
        for j in (0..self.ny).rev() {
            let row: String = (0..self.nx)
                .map(|i| match self.cells[self.p_pos(i, j)] {
                    Cell::Outside => '.',
                    Cell::Solid(_) => '#',
                    Cell::Core => 'C',
                    Cell::Outlet { j, .. } => std::char::from_digit((j % 36) as u32, 36).unwrap_or('o'),
                })
                .collect();
            s.push_str(&format!("{j},{row}\n"));
        }
        s
    }
}

pub fn build_grid(trunc: &TruncatedDomain, delta: f64) -> Result<MacGrid> {
    if !(delta > 0.0) {
        return Err(Error::NonCommensurateGrid(delta));
    }
    let spec = trunc.spec();
    let t = trunc.t;
    if !spec.lengths().iter().chain(std::iter::once(&t)).all(|&x| commensurate(x, delta)) {
        return Err(Error::NonCommensurateGrid(delta));
    }
    let bb = spec.bounding_box(t);
    let nx = ((bb.x1 - bb.x0) / delta).round() as usize;
    let ny = ((bb.y1 - bb.y0) / delta).round() as usize;
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = bb.x0 + (i as f64 + 0.5) * delta;
            let y = bb.y0 + (j as f64 + 0.5) * delta;
            cells.push(match spec.classify(x, y, t) {
                Region::Outside => Cell::Outside,
                Region::Solid(k) => Cell::Solid(k),
                Region::Core => Cell::Core,
                Region::Outlet(j) => {
                    let (xl, _) = spec.outlets[j].to_local([x, y]);
                    Cell::Outlet { j, m: (xl / delta).floor() as usize }
                }
            });
        }
    }

    // Core wall faces continuing an outlet wall from its mouth corner.
    let mut continuation: std::collections::HashMap<FacePos, (usize, u8)> = Default::default();
    let probe = MacGrid::from_cells(delta, nx, ny, bb.x0, bb.y0, cells.clone(), |_, _| Tag::Cap(0))?;
    for (j, o) in spec.outlets.iter().enumerate() {
        for side in 0..2u8 {
            let y = if side == 0 { 0.0 } else { o.width };
            let inward = if side == 0 { 1.0 } else { -1.0 };
            let mut k = 0usize;
            loop {
                let mid = o.to_global(-(k as f64 + 0.5) * delta, y);
                let Some(f) = probe.face_at(mid) else { break };
                if probe.face_kind(f) != FaceKind::Boundary {
                    break;
                }
                let inside = o.to_global(-(k as f64 + 0.5) * delta, y + inward * 0.5 * delta);
                match probe.cell_at(inside).map(|c| probe.cells[c]) {
                    Some(Cell::Core) => {}
                    _ => break,
                }
                continuation.entry(f).or_insert((j, side));
                k += 1;
            }
        }
    }

    MacGrid::from_cells(delta, nx, ny, bb.x0, bb.y0, cells, |g, f| {
        let [a, b] = g.face_cells(f);
        let fluid = a.or(b).expect("boundary face has a fluid cell");
        let (i, j) = g.p_ij(fluid);
        let (fi, fj) = (i as isize, j as isize);
        let other = match (f, a.is_some()) {
            (FacePos::U(_), true) => g.cell(fi + 1, fj),
            (FacePos::U(_), false) => g.cell(fi - 1, fj),
            (FacePos::V(_), true) => g.cell(fi, fj + 1),
            (FacePos::V(_), false) => g.cell(fi, fj - 1),
        };
        if let Cell::Solid(k) = other {
            let side = match (f, a.is_some()) {
                (FacePos::U(_), true) => Side::Left,
                (FacePos::U(_), false) => Side::Right,
                (FacePos::V(_), true) => Side::Bottom,
                (FacePos::V(_), false) => Side::Top,
            };
            return Tag::Wall(WallKind::Obstacle { i: k, side });
        }
        match g.cells[fluid] {
            Cell::Outlet { j: oj, .. } => {
                let o = &spec.outlets[oj];
                let (xl, yl) = o.to_local(g.face_center(f));
                if (xl - t).abs() < 0.25 * delta {
                    Tag::Cap(oj)
                } else {
                    Tag::Wall(WallKind::Outlet { j: oj, side: if yl < 0.5 * o.width { 0 } else { 1 } })
                }
            }
            _ => {
                let c = g.face_center(f);
                let n = g.boundary_normal(f);
                let half = [0.5 * delta * n[1].abs(), 0.5 * delta * n[0].abs()];
                let (pa, pb) = ([c[0] - half[0], c[1] - half[1]], [c[0] + half[0], c[1] + half[1]]);
                if let Some(k) = spec.core_walls.iter().position(|w| w.covers(pa, pb, 1e-9 * delta)) {
                    Tag::Wall(WallKind::Override(k))
                } else {
                    Tag::Wall(WallKind::Core { continuation: continuation.get(&f).copied() })
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rectangle_counts() {
        let g = MacGrid::rectangle(16, 4, 0.25).unwrap();
        assert_eq!(g.n_fluid_cells(), 64);
        assert_eq!(g.u_of.len(), 15 * 4);
        assert_eq!(g.v_of.len(), 16 * 3);
        assert_eq!(g.pin, 0);
    }

    #[test]
    fn wall_neighbours() {
        let g = MacGrid::rectangle(3, 3, 1.0).unwrap();
        let p = g.u_pos(1, 2);
        match g.u_nb(p, Dir::North).unwrap() {
            Nb::Wall { sides, opposite } => {
                assert_eq!(sides, [g.v_pos(0, 3), g.v_pos(1, 3)]);
                assert_eq!(opposite, Some(g.u_pos(1, 1)));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(g.u_nb(p, Dir::West), Some(Nb::Active(g.u_pos(0, 2))));
        let q = g.v_pos(0, 1);
        match g.v_nb(q, Dir::West).unwrap() {
            Nb::Wall { sides, .. } => assert_eq!(sides, [g.u_pos(0, 0), g.u_pos(0, 1)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_cell_gap_has_no_opposite() {
        let g = MacGrid::rectangle(3, 1, 1.0).unwrap();
        match g.u_nb(g.u_pos(1, 0), Dir::North).unwrap() {
            Nb::Wall { opposite, .. } => assert_eq!(opposite, None),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn face_lookup() {
        let g = MacGrid::rectangle(4, 4, 0.5).unwrap();
        assert_eq!(g.face_at([1.0, 0.25]), Some(FacePos::U(g.u_pos(2, 0))));
        assert_eq!(g.face_at([0.75, 1.0]), Some(FacePos::V(g.v_pos(1, 2))));
        assert_eq!(g.face_at([0.7, 1.0]), None);
    }
}
