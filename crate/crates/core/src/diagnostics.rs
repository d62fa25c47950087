//! Checks run on converged solves: the energy balance on `Ω^t`, the Bernoulli
//! function with the divergence identity for Euler pairs, convergence to
//! Couette–Poiseuille along the outlets, and the two-start uniqueness test.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::carrier::stream::{faces_from_stream, NodeStream};
use crate::carrier::CarrierField;
use crate::error::{Error, Result};
use crate::field::{BoundaryData, FaceForce, StaggeredField};
use crate::geometry::{cross_section, TruncatedDomain};
use crate::grid::{Cell, Dir, FaceKind, FacePos, MacGrid, Nb};
use crate::ops::{self, face_in_region, DIRS};
use crate::solver::{dirichlet_norm, solve_steady_ns, CarrierSample, SolveResult, SolverOptions};

/// Terms of the energy balance on `Ω^t`:
/// `D = forcing − transport + boundary`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyBalance {
    pub t: f64,
    /// `∫_{Ω^t} |∇w|²`.
    pub dirichlet: f64,
    /// `∫ g·w` with `g = f + ΔU − (U·∇)U`.
    pub forcing: f64,
    /// `∫ (w·∇)U·w`.
    pub transport: f64,
    /// Viscous, convective and pressure terms on the section `σ^t` (and on walls
    /// where the carrier crosses them).
    pub viscous_flux: f64,
    pub convective_flux: f64,
    pub pressure_flux: f64,
    /// `|LHS − RHS| / max(LHS, ε_mach)`.
    pub residual: f64,
}

fn sign(d: Dir) -> f64 {
    match d {
        Dir::East | Dir::North => 1.0,
        Dir::West | Dir::South => -1.0,
    }
}

/// Energy balance of a converged solve on `Ω^t`.
///
/// Every term is a discrete sum; the section terms come from summation by
/// parts of the staggered operators, so the balance closes to the size of the
/// momentum residual. Pressure enters only through `∫_σ p w·n`, which is blind
/// to constant shifts since `w` carries no net flux through `σ^t`.
pub fn energy_identity_residual(
    grid: &MacGrid,
    carrier: &CarrierSample,
    result: &SolveResult,
    force: &FaceForce,
    t: f64,
) -> EnergyBalance {
    let d = grid.delta;
    let d2 = d * d;
    let u = &result.u;
    let cu = &carrier.field;
    let w = &result.w;
    let region = |c: usize| grid.cell_in_truncation(c, t);
    let in_u = |p: usize| face_in_region(grid.u_cells(p), &region);
    let in_v = |p: usize| face_in_region(grid.v_cells(p), &region);
    let zero = BoundaryData::zeros(grid);

    let dirichlet = ops::dirichlet_energy(grid, &w.u, &w.v, &zero, &region);

    let (au, av) = ops::neg_laplacian(grid, &cu.u, &cu.v, &carrier.bc);
    let (cuu, cuv) = ops::convection(grid, &cu.u, &cu.v, &cu.u, &cu.v, &carrier.bc);
    let (tu, tv) = ops::convection(grid, &u.u, &u.v, &cu.u, &cu.v, &carrier.bc);
    let mut forcing = 0.0;
    let mut transport = 0.0;
    for &p in grid.u_of.iter().filter(|&&p| in_u(p)) {
        forcing += w.u[p] * (force.u[p] - au[p] - cuu[p]) * d2;
        transport += w.u[p] * (tu[p] - cuu[p]) * d2;
    }
    for &p in grid.v_of.iter().filter(|&&p| in_v(p)) {
        forcing += w.v[p] * (force.v[p] - av[p] - cuv[p]) * d2;
        transport += w.v[p] * (tv[p] - cuv[p]) * d2;
    }

    let div = ops::divergence(grid, &u.u, &u.v);
    let avg_div = |cells: [Option<usize>; 2]| {
        let v: Vec<f64> = cells.iter().flatten().map(|&c| div[c]).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    };
    let mut viscous = 0.0;
    let mut convective = 0.0;
    for &p in grid.u_of.iter().filter(|&&p| in_u(p)) {
        let (i, j) = grid.u_ij(p);
        let b = w.u[p];
        let mut wall_transport = 0.0;
        for dir in DIRS {
            let a = match dir {
                Dir::East => 0.5 * (u.u[p] + u.u[grid.u_pos(i + 1, j)]),
                Dir::West => 0.5 * (u.u[grid.u_pos(i - 1, j)] + u.u[p]),
                Dir::North => 0.5 * (u.v[grid.v_pos(i - 1, j + 1)] + u.v[grid.v_pos(i, j + 1)]),
                Dir::South => 0.5 * (u.v[grid.v_pos(i - 1, j)] + u.v[grid.v_pos(i, j)]),
            };
            match grid.u_nb(p, dir).expect("interior face") {
                Nb::Active(q) if !in_u(q) || grid.u_kind[q] != FaceKind::Interior => {
                    if !in_u(q) {
                        viscous += 0.5 * (b * b - w.u[q] * w.u[q]);
                    }
                    convective += 0.5 * sign(dir) * a * b * w.u[q] * d;
                }
                Nb::Active(_) => {}
                Nb::Wall { .. } => wall_transport += sign(dir) * a,
            }
        }
        convective += 0.5 * b * b * (d2 * avg_div(grid.u_cells(p)) - wall_transport * d);
    }
    for &p in grid.v_of.iter().filter(|&&p| in_v(p)) {
        let (i, j) = grid.v_ij(p);
        let b = w.v[p];
        let mut wall_transport = 0.0;
        for dir in DIRS {
            let a = match dir {
                Dir::North => 0.5 * (u.v[p] + u.v[grid.v_pos(i, j + 1)]),
                Dir::South => 0.5 * (u.v[grid.v_pos(i, j - 1)] + u.v[p]),
                Dir::East => 0.5 * (u.u[grid.u_pos(i + 1, j - 1)] + u.u[grid.u_pos(i + 1, j)]),
                Dir::West => 0.5 * (u.u[grid.u_pos(i, j - 1)] + u.u[grid.u_pos(i, j)]),
            };
            match grid.v_nb(p, dir).expect("interior face") {
                Nb::Active(q) if !in_v(q) || grid.v_kind[q] != FaceKind::Interior => {
                    if !in_v(q) {
                        viscous += 0.5 * (b * b - w.v[q] * w.v[q]);
                    }
                    convective += 0.5 * sign(dir) * a * b * w.v[q] * d;
                }
                Nb::Active(_) => {}
                Nb::Wall { .. } => wall_transport += sign(dir) * a,
            }
        }
        convective += 0.5 * b * b * (d2 * avg_div(grid.v_cells(p)) - wall_transport * d);
    }

    let wdiv = ops::divergence(grid, &w.u, &w.v);
    let mut pressure = 0.0;
    for &c in grid.p_of.iter().filter(|&&c| region(c)) {
        let (i, j) = grid.p_ij(c);
        let pc = u.p[c];
        pressure -= pc * d2 * wdiv[c];
        let faces = [
            (FacePos::U(grid.u_pos(i + 1, j)), 1.0),
            (FacePos::U(grid.u_pos(i, j)), -1.0),
            (FacePos::V(grid.v_pos(i, j + 1)), 1.0),
            (FacePos::V(grid.v_pos(i, j)), -1.0),
        ];
        for (f, s) in faces {
            let crosses =
                grid.face_cells(f).iter().flatten().any(|&o| o != c && grid.cells[o].is_fluid() && !region(o));
            if crosses {
                pressure += pc * d * s * w.face(f);
            }
        }
    }

    let rhs = forcing - transport - viscous - convective - pressure;
    EnergyBalance {
        t,
        dirichlet,
        forcing,
        transport,
        viscous_flux: -viscous,
        convective_flux: -convective,
        pressure_flux: -pressure,
        residual: (dirichlet - rhs).abs() / dirichlet.max(f64::EPSILON),
    }
}

/// Velocity and pressure collocated at the centres of an `nx × ny` block of
/// cells with lower-left corner `(x0, y0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterField {
    pub nx: usize,
    pub ny: usize,
    pub delta: f64,
    pub x0: f64,
    pub y0: f64,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    pub q: Vec<f64>,
}

impl CenterField {
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x0 + (i as f64 + 0.5) * self.delta, self.y0 + (j as f64 + 0.5) * self.delta]
    }

    pub fn sample(nx: usize, ny: usize, delta: f64, x0: f64, y0: f64, f: impl Fn([f64; 2]) -> ([f64; 2], f64)) -> Self {
        let mut out = CenterField {
            nx,
            ny,
            delta,
            x0,
            y0,
            vx: vec![0.0; nx * ny],
            vy: vec![0.0; nx * ny],
            q: vec![0.0; nx * ny],
        };
        for j in 0..ny {
            for i in 0..nx {
                let (v, q) = f(out.center(i, j));
                let k = j * nx + i;
                (out.vx[k], out.vy[k], out.q[k]) = (v[0], v[1], q);
            }
        }
        out
    }

    /// Face averages of a MAC field interpolated to the centres of the grid's
    /// cells; non-fluid cells are `NaN`.
    pub fn from_mac(grid: &MacGrid, field: &StaggeredField) -> Self {
        let n = grid.nx * grid.ny;
        let mut out = CenterField {
            nx: grid.nx,
            ny: grid.ny,
            delta: grid.delta,
            x0: grid.x0,
            y0: grid.y0,
            vx: vec![f64::NAN; n],
            vy: vec![f64::NAN; n],
            q: vec![f64::NAN; n],
        };
        for &c in &grid.p_of {
            let (i, j) = grid.p_ij(c);
            out.vx[c] = 0.5 * (field.u[grid.u_pos(i, j)] + field.u[grid.u_pos(i + 1, j)]);
            out.vy[c] = 0.5 * (field.v[grid.v_pos(i, j)] + field.v[grid.v_pos(i, j + 1)]);
            out.q[c] = field.p[c];
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliField {
    /// `Φ = q + |v|²/2` at centres.
    pub phi: Vec<f64>,
    /// Vorticity at the interior nodes `(i, j)`, `1 ≤ i < nx`, `1 ≤ j < ny`,
    /// stored row-major with stride `nx + 1`; `NaN` elsewhere.
    pub omega: Vec<f64>,
    /// Largest `|div(q z + (v·z) v) − 2Φ|` over interior centres.
    pub identity_residual: f64,
}

/// Bernoulli function and the residual of `div(q z + (v·z) v) = 2Φ`, `z` the
/// position, which holds for steady Euler pairs. Centred differences.
pub fn bernoulli_and_euler_identity(f: &CenterField) -> BernoulliField {
    let (nx, ny, d) = (f.nx, f.ny, f.delta);
    let idx = |i: usize, j: usize| j * nx + i;
    let phi: Vec<f64> = (0..nx * ny).map(|k| f.q[k] + 0.5 * (f.vx[k] * f.vx[k] + f.vy[k] * f.vy[k])).collect();
    let flux = |i: usize, j: usize| {
        let k = idx(i, j);
        let z = f.center(i, j);
        let vz = f.vx[k] * z[0] + f.vy[k] * z[1];
        [f.q[k] * z[0] + vz * f.vx[k], f.q[k] * z[1] + vz * f.vy[k]]
    };
    let mut residual = 0.0f64;
    for j in 1..ny.saturating_sub(1) {
        for i in 1..nx.saturating_sub(1) {
            let dx = (flux(i + 1, j)[0] - flux(i - 1, j)[0]) / (2.0 * d);
            let dy = (flux(i, j + 1)[1] - flux(i, j - 1)[1]) / (2.0 * d);
            let r = dx + dy - 2.0 * phi[idx(i, j)];
            if r.is_finite() {
                residual = residual.max(r.abs());
            }
        }
    }
    let mut omega = vec![f64::NAN; (nx + 1) * (ny + 1)];
    for j in 1..ny {
        for i in 1..nx {
            let dvy = 0.5 * (f.vy[idx(i, j)] + f.vy[idx(i, j - 1)] - f.vy[idx(i - 1, j)] - f.vy[idx(i - 1, j - 1)]) / d;
            let dvx = 0.5 * (f.vx[idx(i, j)] + f.vx[idx(i - 1, j)] - f.vx[idx(i, j - 1)] - f.vx[idx(i - 1, j - 1)]) / d;
            omega[j * (nx + 1) + i] = dvy - dvx;
        }
    }
    BernoulliField { phi, omega, identity_residual: residual }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutletAsymptotics {
    pub outlet: usize,
    /// Section positions `x = mΔ`.
    pub x: Vec<f64>,
    /// `sup_{σ^x} |u − CP|` at each section.
    pub deviation: Vec<f64>,
    /// `(τ, ‖∇(u − CP)‖ over Ω^{τ,τ+1})` for unit slabs inside the truncation.
    pub slab_seminorm: Vec<(f64, f64)>,
    pub max_cp: f64,
    /// Largest deviation over the last slab of the tail window.
    pub final_deviation: f64,
    pub monotone_tail: bool,
    pub below_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticsReport {
    pub t: f64,
    pub tail: [f64; 2],
    pub outlets: Vec<OutletAsymptotics>,
}

impl AsymptoticsReport {
    pub fn passed(&self) -> bool {
        self.outlets.iter().all(|o| o.monotone_tail && o.below_threshold)
    }
}

/// Shortest truncation the asymptotics report accepts.
pub const MIN_ASYMPTOTIC_LENGTH: f64 = 12.0;
/// Changes smaller than this fraction of `max |CP|` are rounding, not growth.
pub const NOISE_FLOOR: f64 = 1e-9;

/// Deviation of `u` from the Couette–Poiseuille flow of each outlet.
///
/// The tail window is `[t − 8, t − 2]`; the last two units next to the cap are
/// left out. Decay is judged on the unit-spaced samples in the window.
pub fn asymptotics_report(
    trunc: &TruncatedDomain,
    grid: &MacGrid,
    u: &StaggeredField,
    threshold: f64,
) -> Result<AsymptoticsReport> {
    let t = trunc.t;
    if t < MIN_ASYMPTOTIC_LENGTH {
        return Err(Error::TruncationTooShort(t));
    }
    let d = grid.delta;
    let tail = [t - 8.0, t - 2.0];
    let mut outlets = Vec::new();
    for (j, o) in trunc.spec().outlets.iter().enumerate() {
        let cp = trunc.parent.cps[j];
        let n = (o.width / d).round() as usize;
        let avg: Vec<f64> = (0..n).map(|s| cp.cell_average(s as f64 * d, (s + 1) as f64 * d)).collect();
        let max_cp = avg.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let e2 = o.e2();
        let m_end = (t / d).round() as usize;
        let mut xs = Vec::new();
        let mut dev = Vec::new();
        for m in 1..m_end {
            let x = m as f64 * d;
            let sec = cross_section(trunc, grid, j, x)?;
            let mut worst = sec.values(u).iter().zip(&avg).fold(0.0f64, |a, (v, c)| a.max((v - c).abs()));
            // Transverse component on the column just inside the section.
            for s in 1..n {
                if let Some(f) = grid.face_at(o.to_global(x - 0.5 * d, s as f64 * d)) {
                    let comp = match f {
                        FacePos::U(_) => e2[0],
                        FacePos::V(_) => e2[1],
                    };
                    worst = worst.max((comp * u.face(f)).abs());
                }
            }
            xs.push(x);
            dev.push(worst);
        }
        let at = |x: f64| xs.iter().position(|&s| (s - x).abs() < 1e-9 * x.max(1.0)).map(|i| dev[i]);
        let samples: Vec<f64> =
            (0..=(tail[1] - tail[0]).round() as usize).filter_map(|k| at(tail[0] + k as f64)).collect();
        let floor = NOISE_FLOOR * max_cp.max(f64::MIN_POSITIVE);
        let monotone_tail = samples.windows(2).all(|w| w[1] <= w[0] + floor);
        let final_deviation = xs
            .iter()
            .zip(&dev)
            .filter(|(&x, _)| x >= tail[1] - 1.0 - 1e-9 && x <= tail[1] + 1e-9)
            .fold(0.0f64, |m, (_, &v)| m.max(v));
        let slab_seminorm = slab_deviation(trunc, grid, u, j)?;
        outlets.push(OutletAsymptotics {
            outlet: j,
            x: xs,
            deviation: dev,
            slab_seminorm,
            max_cp,
            final_deviation,
            monotone_tail,
            below_threshold: final_deviation <= threshold * max_cp,
        });
    }
    Ok(AsymptoticsReport { t, tail, outlets })
}

/// `‖∇(u − CP_j)‖` over unit slabs `Ω_j^{τ,τ+1}`, `1 ≤ τ ≤ t − 1`.
fn slab_deviation(trunc: &TruncatedDomain, grid: &MacGrid, u: &StaggeredField, j: usize) -> Result<Vec<(f64, f64)>> {
    let o = &trunc.spec().outlets[j];
    let cp = trunc.parent.cps[j];
    let d = grid.delta;
    let mut diff = StaggeredField::zeros(grid);
    let e1 = o.e1();
    let in_outlet = |c: Option<usize>| c.is_some_and(|c| matches!(grid.cells[c], Cell::Outlet { j: k, .. } if k == j));
    for f in (0..grid.n_u_faces()).map(FacePos::U).chain((0..grid.n_v_faces()).map(FacePos::V)) {
        if grid.face_kind(f) == FaceKind::Inactive || !grid.face_cells(f).iter().any(|&c| in_outlet(c)) {
            continue;
        }
        let (_, yl) = o.to_local(grid.face_center(f));
        let comp = match f {
            FacePos::U(_) => e1[0],
            FacePos::V(_) => e1[1],
        };
        // Only faces normal to e1 carry the axial component.
        let axial = if comp != 0.0 { comp * cp.cell_average(yl - 0.5 * d, yl + 0.5 * d) } else { 0.0 };
        let v = u.face(f) - axial;
        match f {
            FacePos::U(p) => diff.u[p] = v,
            FacePos::V(p) => diff.v[p] = v,
        }
    }
    let mut out = Vec::new();
    let mut tau = 1.0;
    while tau + 1.0 <= trunc.t + 1e-9 {
        let slab = |c: usize| match grid.cells[c] {
            Cell::Outlet { j: k, m } => {
                let x = (m as f64 + 0.5) * d;
                k == j && x > tau && x < tau + 1.0
            }
            _ => false,
        };
        out.push((tau, dirichlet_norm(grid, &diff, &slab)));
        tau += 1.0;
    }
    Ok(out)
}

/// A random field with zero divergence, zero boundary values and Dirichlet
/// norm `size`: the curl of a nodal stream function that vanishes on every node
/// touching a non-interior face.
pub fn random_solenoidal(grid: &MacGrid, size: f64, seed: u64) -> StaggeredField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chi = NodeStream { nx: grid.nx, ny: grid.ny, chi: vec![0.0; (grid.nx + 1) * (grid.ny + 1)] };
    let mut pinned = vec![true; chi.chi.len()];
    let mut free = vec![false; chi.chi.len()];
    for f in (0..grid.n_u_faces()).map(FacePos::U).chain((0..grid.n_v_faces()).map(FacePos::V)) {
        let [a, b] = crate::carrier::stream::face_nodes(grid, f);
        for (i, j) in [a, b] {
            let k = chi.index(i, j);
            match grid.face_kind(f) {
                FaceKind::Interior => free[k] = true,
                _ => pinned[k] = false,
            }
        }
    }
    for k in 0..chi.chi.len() {
        if free[k] && pinned[k] {
            chi.chi[k] = rng.random_range(-1.0..1.0);
        }
    }
    let (u, v) = faces_from_stream(grid, &chi, &|_| 0.0);
    let mut w = StaggeredField { u, v, p: vec![0.0; grid.n_cells()] };
    let n = dirichlet_norm(grid, &w, &|_| true);
    if n > 0.0 {
        w = w.scale(size / n);
    }
    w
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessOutcome {
    /// `max |u_A − u_B| / max |u_A|` over faces.
    pub discrepancy: f64,
    pub j_a: f64,
    pub j_b: f64,
}

/// Solve twice, from `w = 0` and from a random solenoidal start of Dirichlet
/// norm `perturbation`, and compare the converged velocities.
pub fn uniqueness_experiment(
    grid: &MacGrid,
    carrier: &CarrierSample,
    force: &FaceForce,
    opts: &SolverOptions,
    perturbation: f64,
    seed: u64,
) -> Result<UniquenessOutcome> {
    let a = solve_steady_ns(grid, carrier, force, opts, None)?;
    let w0 = random_solenoidal(grid, perturbation, seed);
    let b = solve_steady_ns(grid, carrier, force, opts, Some(&w0))?;
    let scale = a.u.max_velocity().max(f64::MIN_POSITIVE);
    let gap = a.u.u.iter().zip(&b.u.u).chain(a.u.v.iter().zip(&b.u.v)).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    Ok(UniquenessOutcome { discrepancy: gap / scale, j_a: a.j, j_b: b.j })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub amplitude: f64,
    /// `None` when a solve failed.
    pub discrepancy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessSweep {
    pub rows: Vec<SweepRow>,
    /// First amplitude whose two runs disagree beyond the tolerance or fail.
    pub first_split: Option<f64>,
}

/// Uniqueness experiment with all boundary data scaled so the largest outlet
/// flux equals each amplitude in turn.
pub fn uniqueness_sweep(
    carrier: &CarrierField,
    t: f64,
    amplitudes: &[f64],
    opts: &SolverOptions,
    perturbation: f64,
    seed: u64,
    tolerance: f64,
) -> Result<UniquenessSweep> {
    let (_, grid, base) = carrier.sample_truncation(t)?;
    let fmax = carrier.domain.spec.outlets.iter().fold(0.0f64, |m, o| m.max(o.flux.abs()));
    if fmax == 0.0 {
        return Err(Error::Precondition("all outlet fluxes vanish; nothing to scale".into()));
    }
    let force = FaceForce::zero(&grid);
    let mut rows = Vec::new();
    let mut first_split = None;
    for &amp in amplitudes {
        let s = amp / fmax;
        let sample = CarrierSample { field: base.field.scale(s), bc: base.bc.scale(s), mode: base.mode };
        let row = match uniqueness_experiment(&grid, &sample, &force, opts, perturbation, seed) {
            Ok(o) => SweepRow { amplitude: amp, discrepancy: Some(o.discrepancy), error: None },
            Err(e) => SweepRow { amplitude: amp, discrepancy: None, error: Some(e.to_string()) },
        };
        if first_split.is_none() && row.discrepancy.is_none_or(|x| x > tolerance) {
            first_split = Some(amp);
        }
        rows.push(row);
    }
    Ok(UniquenessSweep { rows, first_split })
}
