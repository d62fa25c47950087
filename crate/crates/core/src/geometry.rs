//! Rectilinear junction domains: a core made of rectangles, rectangular
//! obstacles inside it, and semi-infinite outlets attached to its boundary.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{cp_from_data, CouettePoiseuille};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "+x")]
    PlusX,
    #[serde(rename = "-x")]
    MinusX,
    #[serde(rename = "+y")]
    PlusY,
    #[serde(rename = "-y")]
    MinusY,
}

impl Direction {
    /// Unit vector pointing down the outlet.
    pub fn e1(self) -> [i64; 2] {
        match self {
            Direction::PlusX => [1, 0],
            Direction::MinusX => [-1, 0],
            Direction::PlusY => [0, 1],
            Direction::MinusY => [0, -1],
        }
    }

    /// Unit vector across the outlet, from the lower wall to the upper one.
    /// `(e1, e2)` is always positively oriented.
    pub fn e2(self) -> [i64; 2] {
        let e = self.e1();
        [-e[1], e[0]]
    }

    pub fn parse(s: &str) -> Option<Direction> {
        match s {
            "+x" => Some(Direction::PlusX),
            "-x" => Some(Direction::MinusX),
            "+y" => Some(Direction::PlusY),
            "-y" => Some(Direction::MinusY),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::PlusX => "+x",
            Direction::MinusX => "-x",
            Direction::PlusY => "+y",
            Direction::MinusY => "-y",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl From<[f64; 4]> for Rect {
    fn from(a: [f64; 4]) -> Self {
        Rect { x0: a[0], y0: a[1], x1: a[2], y1: a[3] }
    }
}

impl From<Rect> for [f64; 4] {
    fn from(r: Rect) -> Self {
        [r.x0, r.y0, r.x1, r.y1]
    }
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0: x0.min(x1), y0: y0.min(y1), x1: x0.max(x1), y1: y0.max(y1) }
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x > self.x0 && x < self.x1 && y > self.y0 && y < self.y1
    }

    /// Positive-area intersection of the open boxes.
    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.y0 < o.y1 && o.y0 < self.y1
    }

    pub fn is_proper(&self) -> bool {
        self.x1 > self.x0 && self.y1 > self.y0 && self.area().is_finite()
    }
}

/// Normal and tangential parts of a constant wall velocity. The normal is the
/// outward normal of the fluid region; the tangent is the normal turned
/// counter-clockwise.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SideData {
    #[serde(default)]
    pub normal: f64,
    #[serde(default)]
    pub tangential: f64,
}

impl SideData {
    /// Global velocity for a side with outward normal `n`.
    pub fn velocity(&self, n: [f64; 2]) -> [f64; 2] {
        let tau = [-n[1], n[0]];
        [self.normal * n[0] + self.tangential * tau[0], self.normal * n[1] + self.tangential * tau[1]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    /// Outward normal of the fluid on this side of an obstacle.
    pub fn obstacle_normal(self) -> [f64; 2] {
        match self {
            Side::Left => [1.0, 0.0],
            Side::Right => [-1.0, 0.0],
            Side::Bottom => [0.0, 1.0],
            Side::Top => [0.0, -1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutletSpec {
    pub direction: Direction,
    pub attach: [f64; 2],
    pub width: f64,
    pub flux: f64,
    #[serde(default)]
    pub slip: [f64; 2],
}

impl OutletSpec {
    pub fn e1(&self) -> [f64; 2] {
        let e = self.direction.e1();
        [e[0] as f64, e[1] as f64]
    }

    pub fn e2(&self) -> [f64; 2] {
        let e = self.direction.e2();
        [e[0] as f64, e[1] as f64]
    }

    pub fn to_global(&self, x: f64, y: f64) -> [f64; 2] {
        let (e1, e2) = (self.e1(), self.e2());
        [self.attach[0] + x * e1[0] + y * e2[0], self.attach[1] + x * e1[1] + y * e2[1]]
    }

    pub fn to_local(&self, z: [f64; 2]) -> (f64, f64) {
        let d = [z[0] - self.attach[0], z[1] - self.attach[1]];
        let (e1, e2) = (self.e1(), self.e2());
        (d[0] * e1[0] + d[1] * e1[1], d[0] * e2[0] + d[1] * e2[1])
    }

    /// The strip truncated to `0 < x < len` (`len` may be infinite).
    pub fn strip(&self, len: f64) -> Rect {
        let p = self.attach;
        let e1 = self.e1();
        let e2 = self.e2();
        let far = |s: f64, e: f64| if e == 0.0 { 0.0 } else { s * e };
        let a = [p[0] + far(len, e1[0]), p[1] + far(len, e1[1])];
        let b = [p[0] + self.width * e2[0], p[1] + self.width * e2[1]];
        let xs = [p[0], a[0], b[0]];
        let ys = [p[1], a[1], b[1]];
        let min = |v: [f64; 3]| v.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = |v: [f64; 3]| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Rect { x0: min(xs), y0: min(ys), x1: max(xs), y1: max(ys) }
    }

    pub fn couette_poiseuille(&self) -> Result<CouettePoiseuille> {
        cp_from_data(self.width, self.slip[0], self.slip[1], self.flux)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSpec {
    pub rect: Rect,
    #[serde(default)]
    pub left: SideData,
    #[serde(default)]
    pub right: SideData,
    #[serde(default)]
    pub bottom: SideData,
    #[serde(default)]
    pub top: SideData,
}

impl ObstacleSpec {
    pub fn side(&self, s: Side) -> SideData {
        match s {
            Side::Left => self.left,
            Side::Right => self.right,
            Side::Bottom => self.bottom,
            Side::Top => self.top,
        }
    }

    /// Integral of `a·n` over the obstacle boundary.
    pub fn normal_flux(&self) -> f64 {
        let w = self.rect.x1 - self.rect.x0;
        let h = self.rect.y1 - self.rect.y0;
        (self.left.normal + self.right.normal) * h + (self.bottom.normal + self.top.normal) * w
    }
}

/// Explicit wall data on an axis-aligned piece of the core boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallSegment {
    pub from: [f64; 2],
    pub to: [f64; 2],
    #[serde(flatten)]
    pub data: SideData,
}

impl WallSegment {
    pub fn length(&self) -> f64 {
        (self.to[0] - self.from[0]).abs() + (self.to[1] - self.from[1]).abs()
    }

    pub fn covers(&self, a: [f64; 2], b: [f64; 2], tol: f64) -> bool {
        let on = |p: [f64; 2]| {
            let (x0, x1) = (self.from[0].min(self.to[0]), self.from[0].max(self.to[0]));
            let (y0, y1) = (self.from[1].min(self.to[1]), self.from[1].max(self.to[1]));
            p[0] >= x0 - tol && p[0] <= x1 + tol && p[1] >= y0 - tol && p[1] <= y1 + tol
        };
        on(a) && on(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub core: Vec<Rect>,
    pub outlets: Vec<OutletSpec>,
    #[serde(default)]
    pub obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    pub core_walls: Vec<WallSegment>,
}

/// What a point of the plane belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Outside,
    Solid(usize),
    Core,
    /// Outlet `j`, with the local abscissa of the point.
    Outlet(usize),
}

impl DomainSpec {
    pub fn in_core(&self, x: f64, y: f64) -> bool {
        self.core.iter().any(|r| r.contains(x, y))
    }

    /// Classify a point that does not lie on any grid line of the geometry.
    pub fn classify(&self, x: f64, y: f64, t: f64) -> Region {
        for (i, o) in self.obstacles.iter().enumerate() {
            if o.rect.contains(x, y) {
                return Region::Solid(i);
            }
        }
        if self.in_core(x, y) {
            return Region::Core;
        }
        for (j, o) in self.outlets.iter().enumerate() {
            let (xl, yl) = o.to_local([x, y]);
            if xl > 0.0 && xl < t && yl > 0.0 && yl < o.width {
                return Region::Outlet(j);
            }
        }
        Region::Outside
    }

    pub fn bounding_box(&self, t: f64) -> Rect {
        let mut b = Rect { x0: f64::INFINITY, y0: f64::INFINITY, x1: f64::NEG_INFINITY, y1: f64::NEG_INFINITY };
        let mut grow = |r: &Rect| {
            b.x0 = b.x0.min(r.x0);
            b.y0 = b.y0.min(r.y0);
            b.x1 = b.x1.max(r.x1);
            b.y1 = b.y1.max(r.y1);
        };
        for r in &self.core {
            grow(r);
        }
        for o in &self.outlets {
            grow(&o.strip(t));
        }
        b
    }

    /// All coordinates that must be representable on a grid.
    pub fn lengths(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for r in &self.core {
            v.extend([r.x0, r.y0, r.x1, r.y1]);
        }
        for o in &self.obstacles {
            v.extend([o.rect.x0, o.rect.y0, o.rect.x1, o.rect.y1]);
        }
        for o in &self.outlets {
            v.extend([o.attach[0], o.attach[1], o.width]);
        }
        for w in &self.core_walls {
            v.extend([w.from[0], w.from[1], w.to[0], w.to[1]]);
        }
        v
    }

    /// `∫ a·n` over obstacle sides and explicitly given core walls.
    pub fn wall_normal_flux(&self) -> f64 {
        let obstacles: f64 = self.obstacles.iter().map(|o| o.normal_flux()).sum();
        let walls: f64 = self.core_walls.iter().map(|w| w.data.normal * w.length()).sum();
        obstacles + walls
    }

    /// Every coordinate and width is a multiple of `delta`.
    pub fn check_commensurate(&self, delta: f64) -> Result<()> {
        let off = self.lengths().into_iter().find(|&x| {
            let s = x / delta;
            (s - s.round()).abs() > 1e-9 * s.abs().max(1.0)
        });
        match off {
            Some(x) => Err(Error::ValidationError {
                key: "delta".into(),
                reason: format!("{x} is not a multiple of the cell size {delta}"),
            }),
            None => Ok(()),
        }
    }

    pub fn compatibility_residual(&self) -> f64 {
        self.wall_normal_flux() + self.outlets.iter().map(|o| o.flux).sum::<f64>()
    }

    fn flux_scale(&self) -> f64 {
        let obstacles: f64 = self
            .obstacles
            .iter()
            .map(|o| {
                let w = o.rect.x1 - o.rect.x0;
                let h = o.rect.y1 - o.rect.y0;
                (o.left.normal.abs() + o.right.normal.abs()) * h + (o.bottom.normal.abs() + o.top.normal.abs()) * w
            })
            .sum();
        let walls: f64 = self.core_walls.iter().map(|w| w.data.normal.abs() * w.length()).sum();
        let fluxes: f64 = self.outlets.iter().map(|o| o.flux.abs()).sum();
        (obstacles + walls + fluxes).max(1.0)
    }
}

/// Largest cell size `1/n`, `n ≤ 256`, on which every coordinate is a lattice point.
pub fn natural_resolution(lengths: &[f64]) -> Option<f64> {
    (1..=256u32).find_map(|n| {
        let ok = lengths.iter().all(|&x| {
            let s = x * n as f64;
            (s - s.round()).abs() <= 1e-9 * s.abs().max(1.0)
        });
        ok.then(|| 1.0 / n as f64)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedDomain {
    pub spec: DomainSpec,
    pub compatibility_residual: f64,
    pub resolution: f64,
    pub core_area: f64,
    pub cps: Vec<CouettePoiseuille>,
}

pub const COMPATIBILITY_TOLERANCE: f64 = 1e-12;

pub fn validate_domain(spec: DomainSpec) -> Result<ValidatedDomain> {
    if spec.outlets.is_empty() {
        return Err(Error::MalformedDomain("at least one outlet is required".into()));
    }
    if spec.core.is_empty() {
        return Err(Error::MalformedDomain("the core needs at least one rectangle".into()));
    }
    for r in spec.core.iter().chain(spec.obstacles.iter().map(|o| &o.rect)) {
        if !r.is_proper() {
            return Err(Error::MalformedDomain(format!("degenerate rectangle {r:?}")));
        }
    }
    let mut cps = Vec::with_capacity(spec.outlets.len());
    for o in &spec.outlets {
        if !(o.width > 0.0) {
            return Err(Error::NonpositiveWidth(o.width));
        }
        cps.push(o.couette_poiseuille()?);
    }
    let res = natural_resolution(&spec.lengths())
        .ok_or_else(|| Error::MalformedDomain("coordinates are not multiples of 1/256 or coarser".into()))?;

    for (a, oa) in spec.obstacles.iter().enumerate() {
        for ob in &spec.obstacles[a + 1..] {
            if oa.rect.overlaps(&ob.rect) {
                return Err(Error::OverlappingRegions(format!("obstacles {:?} and {:?}", oa.rect, ob.rect)));
            }
        }
    }
    for (a, oa) in spec.outlets.iter().enumerate() {
        let sa = oa.strip(f64::INFINITY);
        for r in &spec.core {
            if sa.overlaps(r) {
                return Err(Error::OverlappingRegions(format!("outlet {a} enters core rectangle {r:?}")));
            }
        }
        for (b, ob) in spec.outlets.iter().enumerate().skip(a + 1) {
            if sa.overlaps(&ob.strip(f64::INFINITY)) {
                return Err(Error::OverlappingRegions(format!("outlets {a} and {b}")));
            }
        }
    }

    // Raster checks on the lattice of the geometry, with outlets of length 1.
    let t = 1.0;
    let bb = spec.bounding_box(t);
    let nx = ((bb.x1 - bb.x0) / res).round() as usize;
    let ny = ((bb.y1 - bb.y0) / res).round() as usize;
    let center = |i: usize, j: usize| (bb.x0 + (i as f64 + 0.5) * res, bb.y0 + (j as f64 + 0.5) * res);
    let mut cells = vec![Region::Outside; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let (x, y) = center(i, j);
            cells[j * nx + i] = spec.classify(x, y, t);
        }
    }
    let at = |x: f64, y: f64| spec.classify(x, y, t);
    let h = 0.5 * res;

    for (k, o) in spec.obstacles.iter().enumerate() {
        // Every lattice cell touching the obstacle from outside must be plain core.
        let r = o.rect;
        let mut ring = Vec::new();
        let mut x = r.x0 - h;
        while x < r.x1 + res {
            ring.push((x, r.y0 - h));
            ring.push((x, r.y1 + h));
            x += res;
        }
        let mut y = r.y0 + h;
        while y < r.y1 {
            ring.push((r.x0 - h, y));
            ring.push((r.x1 + h, y));
            y += res;
        }
        for (x, y) in ring {
            if at(x, y) != Region::Core {
                return Err(Error::OverlappingRegions(format!("obstacle {k} is not strictly inside the core")));
            }
        }
    }

    for (j, o) in spec.outlets.iter().enumerate() {
        let steps = (o.width / res).round() as usize;
        for s in 0..steps {
            let y = (s as f64 + 0.5) * res;
            let inside = o.to_global(-h, y);
            let outside = o.to_global(h, y);
            if at(inside[0], inside[1]) != Region::Core || at(outside[0], outside[1]) != Region::Outlet(j) {
                return Err(Error::MalformedDomain(format!("mouth of outlet {j} does not lie on the core boundary")));
            }
        }
        let len = (t / res).round() as usize;
        for s in 0..len {
            let x = (s as f64 + 0.5) * res;
            for y in [-h, o.width + h] {
                let p = o.to_global(x, y);
                if at(p[0], p[1]) != Region::Outside {
                    return Err(Error::OverlappingRegions(format!("walls of outlet {j} touch other fluid")));
                }
            }
        }
    }

    for (k, w) in spec.core_walls.iter().enumerate() {
        let horizontal = w.from[1] == w.to[1];
        let vertical = w.from[0] == w.to[0];
        if horizontal == vertical {
            return Err(Error::MalformedDomain(format!("core wall {k} must be a horizontal or vertical segment")));
        }
        let n = (w.length() / res).round() as usize;
        for s in 0..n {
            let f = (s as f64 + 0.5) / n as f64;
            let x = w.from[0] + f * (w.to[0] - w.from[0]);
            let y = w.from[1] + f * (w.to[1] - w.from[1]);
            let (a, b) = if horizontal { (at(x, y - h), at(x, y + h)) } else { (at(x - h, y), at(x + h, y)) };
            let fluid = |r: Region| matches!(r, Region::Core | Region::Outlet(_));
            if !((a == Region::Core && !fluid(b)) || (b == Region::Core && !fluid(a))) {
                return Err(Error::MalformedDomain(format!("core wall {k} is not on the core boundary")));
            }
            if matches!(a, Region::Solid(_)) || matches!(b, Region::Solid(_)) {
                return Err(Error::MalformedDomain(format!("core wall {k} lies on an obstacle")));
            }
        }
    }

    // Connectivity of the fluid cells.
    let fluid = |r: Region| matches!(r, Region::Core | Region::Outlet(_));
    let total = cells.iter().filter(|&&r| fluid(r)).count();
    if let Some(start) = cells.iter().position(|&r| fluid(r)) {
        let mut seen = vec![false; cells.len()];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 0;
        while let Some(c) = stack.pop() {
            count += 1;
            let (i, j) = (c % nx, c / nx);
            let mut push = |n: usize| {
                if !seen[n] && fluid(cells[n]) {
                    seen[n] = true;
                    stack.push(n);
                }
            };
            if i > 0 {
                push(c - 1);
            }
            if i + 1 < nx {
                push(c + 1);
            }
            if j > 0 {
                push(c - nx);
            }
            if j + 1 < ny {
                push(c + nx);
            }
        }
        if count != total {
            return Err(Error::DisconnectedDomain);
        }
    }
    let core_area = cells.iter().filter(|&&r| r == Region::Core).count() as f64 * res * res;

    let residual = spec.compatibility_residual();
    if residual.abs() > COMPATIBILITY_TOLERANCE * spec.flux_scale() {
        return Err(Error::FluxIncompatible(residual));
    }
    Ok(ValidatedDomain { spec, compatibility_residual: residual, resolution: res, core_area, cps })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapSection {
    pub outlet: usize,
    pub from: [f64; 2],
    pub to: [f64; 2],
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct TruncatedDomain {
    pub parent: Arc<ValidatedDomain>,
    pub t: f64,
    pub caps: Vec<CapSection>,
}

pub fn truncate(domain: &Arc<ValidatedDomain>, t: f64) -> TruncatedDomain {
    let t = t.max(0.0);
    let caps = if t == 0.0 {
        Vec::new()
    } else {
        domain
            .spec
            .outlets
            .iter()
            .enumerate()
            .map(|(j, o)| CapSection {
                outlet: j,
                from: o.to_global(t, 0.0),
                to: o.to_global(t, o.width),
                length: o.width,
            })
            .collect()
    };
    TruncatedDomain { parent: Arc::clone(domain), t, caps }
}

impl TruncatedDomain {
    pub fn spec(&self) -> &DomainSpec {
        &self.parent.spec
    }

    pub fn area(&self) -> f64 {
        self.parent.core_area + self.t * self.spec().outlets.iter().map(|o| o.width).sum::<f64>()
    }
}

/// A column of faces across outlet `j` at a fixed local abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionSampler {
    pub outlet: usize,
    pub x: f64,
    /// Face positions with the sign turning the stored component into `u·e1`.
    pub faces: Vec<(crate::grid::FacePos, f64)>,
    pub weights: Vec<f64>,
}

impl SectionSampler {
    pub fn flux(&self, field: &crate::field::StaggeredField) -> f64 {
        self.faces.iter().zip(&self.weights).map(|(&(f, s), w)| s * field.face(f) * w).sum()
    }

    /// Values of `u·e1` on the column, ordered from the lower wall.
    pub fn values(&self, field: &crate::field::StaggeredField) -> Vec<f64> {
        self.faces.iter().map(|&(f, s)| s * field.face(f)).collect()
    }
}

pub fn cross_section(trunc: &TruncatedDomain, grid: &crate::grid::MacGrid, j: usize, x: f64) -> Result<SectionSampler> {
    let o = trunc.spec().outlets.get(j).ok_or_else(|| Error::OutOfRange(format!("outlet {j}")))?;
    if !(0.0..=trunc.t + 1e-12).contains(&x) {
        return Err(Error::OutOfRange(format!("section at {x} outside [0, {}]", trunc.t)));
    }
    let d = grid.delta;
    let m = x / d;
    if (m - m.round()).abs() > 1e-9 {
        return Err(Error::NonCommensurateGrid(d));
    }
    let n = (o.width / d).round() as usize;
    let mut faces = Vec::with_capacity(n);
    for s in 0..n {
        let mid = o.to_global(x, (s as f64 + 0.5) * d);
        let f =
            grid.face_at(mid).ok_or_else(|| Error::GridMismatch(format!("section point {mid:?} is not on a face")))?;
        let e1 = o.e1();
        let sign = match f {
            crate::grid::FacePos::U(_) => e1[0],
            crate::grid::FacePos::V(_) => e1[1],
        };
        faces.push((f, sign));
    }
    Ok(SectionSampler { outlet: j, x, faces, weights: vec![d; n] })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn strip(len: f64) -> DomainSpec {
        DomainSpec {
            core: vec![Rect::new(0.0, 0.0, len, 1.0)],
            outlets: vec![
                OutletSpec { direction: Direction::PlusX, attach: [len, 0.0], width: 1.0, flux: 1.0, slip: [0.0, 0.0] },
                OutletSpec {
                    direction: Direction::MinusX,
                    attach: [0.0, 1.0],
                    width: 1.0,
                    flux: -1.0,
                    slip: [0.0, 0.0],
                },
            ],
            obstacles: vec![],
            core_walls: vec![],
        }
    }

    #[test]
    fn frames_are_positively_oriented() {
        for d in [Direction::PlusX, Direction::MinusX, Direction::PlusY, Direction::MinusY] {
            let (a, b) = (d.e1(), d.e2());
            assert_eq!(a[0] * b[1] - a[1] * b[0], 1);
        }
    }

    #[test]
    fn local_global_round_trip() {
        let o = OutletSpec { direction: Direction::PlusY, attach: [0.25, 2.0], width: 0.5, flux: 0.0, slip: [0.0; 2] };
        let z = o.to_global(1.5, 0.25);
        assert_eq!(z, [0.0, 3.5]);
        assert_eq!(o.to_local(z), (1.5, 0.25));
    }

    #[test]
    fn strip_is_valid() {
        let v = validate_domain(strip(4.0)).unwrap();
        assert_eq!(v.compatibility_residual, 0.0);
        assert_eq!(v.core_area, 4.0);
        assert_eq!(v.resolution, 1.0);
    }

    #[test]
    fn truncation_area() {
        let v = Arc::new(validate_domain(strip(4.0)).unwrap());
        let t = truncate(&v, 5.0);
        assert_eq!(t.area() - v.core_area, 10.0);
        assert!(truncate(&v, 0.0).caps.is_empty());
    }

    #[test]
    fn outlet_into_core_is_rejected() {
        let mut s = strip(4.0);
        s.outlets[0].direction = Direction::MinusX;
        s.outlets[0].attach = [4.0, 1.0];
        assert!(matches!(validate_domain(s), Err(Error::OverlappingRegions(_))));
    }

    #[test]
    fn detached_mouth_is_rejected() {
        let mut s = strip(4.0);
        s.outlets[0].attach = [5.0, 0.0];
        assert!(validate_domain(s).is_err());
    }

    #[test]
    fn disconnected_core_is_rejected() {
        let mut s = strip(4.0);
        s.core.push(Rect::new(10.0, 10.0, 11.0, 11.0));
        assert_eq!(validate_domain(s), Err(Error::DisconnectedDomain));
    }

    #[test]
    fn flux_gate() {
        let mut s = strip(4.0);
        s.outlets[0].flux = 1.0 + 1e-9;
        match validate_domain(s) {
            Err(Error::FluxIncompatible(r)) => assert!((r - 1e-9).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }
}
