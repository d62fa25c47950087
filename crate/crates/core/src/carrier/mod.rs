//! The flux carrier: a divergence-free field `U` that matches the wall data and
//! carries the outlet fluxes, so that the unknown becomes `w = u − U`.
//!
//! Near the core `U` is a Stokes solution on `Ω²`; far down each outlet it is
//! the cut-off field `V^ε` (or plain Couette–Poiseuille). The two are blended
//! through their stream functions, so the blend stays solenoidal.

pub mod certify;
pub mod hopf;
pub mod stream;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::ResidualNorms;
use crate::field::{BoundaryData, FaceForce, StaggeredField};
use crate::geometry::{cross_section, truncate, TruncatedDomain, ValidatedDomain};
use crate::grid::{build_grid, FaceKind, FacePos, MacGrid, Tag};
use crate::solver::{solve_stokes, CarrierSample};
use certify::{certify_profile, SlabCertificate};
use hopf::{zeta, OutletCarrier};
use stream::{choose_cuts, face_nodes, faces_from_stream, stream_from_faces, Cut, NodeStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CarrierMode {
    Hopf,
    Cp,
}

impl CarrierMode {
    pub fn as_str(self) -> &'static str {
        match self {
            CarrierMode::Hopf => "hopf",
            CarrierMode::Cp => "cp",
        }
    }

    pub fn parse(s: &str) -> Option<CarrierMode> {
        match s {
            "hopf" => Some(CarrierMode::Hopf),
            "cp" => Some(CarrierMode::Cp),
            _ => None,
        }
    }
}

/// Length of the corner region on which the Stokes extension is solved.
pub const CORNER_LENGTH: f64 = 2.0;
/// Truncation used for the certification stored with a carrier.
pub const REPORT_LENGTH: f64 = 4.0;

/// Stokes solution on `Ω²` with wall data and Couette–Poiseuille caps.
#[derive(Debug, Clone)]
pub struct CornerStokes {
    pub trunc: TruncatedDomain,
    pub grid: MacGrid,
    pub field: StaggeredField,
    pub bc: BoundaryData,
    pub residual: ResidualNorms,
}

/// Velocity `CP·e1` averaged over the cap face `f` of outlet `j`.
fn cap_profile(domain: &ValidatedDomain, grid: &MacGrid, j: usize, f: FacePos) -> [f64; 2] {
    let o = &domain.spec.outlets[j];
    let (_, yl) = o.to_local(grid.face_center(f));
    let h = 0.5 * grid.delta;
    let avg = domain.cps[j].cell_average((yl - h).max(0.0), (yl + h).min(o.width));
    let e = o.e1();
    [avg * e[0], avg * e[1]]
}

pub fn solve_corner_stokes(domain: &Arc<ValidatedDomain>, delta: f64) -> Result<CornerStokes> {
    let trunc = truncate(domain, CORNER_LENGTH);
    let grid = build_grid(&trunc, delta)?;
    let bc = BoundaryData::from_domain(&grid, &domain.spec, |j, f| cap_profile(domain, &grid, j, f));
    let out = solve_stokes(&grid, &bc, &FaceForce::zero(&grid))?;
    Ok(CornerStokes { trunc, grid, field: out.field, bc, residual: out.residual })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub mode: CarrierMode,
    pub eps: f64,
    /// Truncation on which the field checks were made.
    pub t: f64,
    pub max_divergence: f64,
    /// Largest `|U·n − a·n|` over wall faces.
    pub trace_error: f64,
    /// `∫_{σ_j^0} U·e1 − F_j` per outlet.
    pub flux_errors: Vec<f64>,
    /// Largest change of the flux between columns of each outlet.
    pub flux_drift: Vec<f64>,
    /// Largest `|c_j¹|` over the columns of `Ω_j^{0,2}`.
    pub c1: Vec<f64>,
    pub stokes_residual: f64,
    /// Divergence noise of the Stokes field seen by the stream reconstruction.
    pub stream_mismatch: f64,
    pub leray_hopf: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CarrierField {
    pub domain: Arc<ValidatedDomain>,
    pub delta: f64,
    pub mode: CarrierMode,
    pub eps: f64,
    pub corner: MacGrid,
    /// Stream function of the Stokes extension on the corner grid.
    pub chi0: NodeStream,
    pub cuts: Vec<Cut>,
    /// `φ_j(m, n)` on the nodes of `Ω_j^{0,2}`, zero on the lower wall.
    pub phi: Vec<Vec<Vec<f64>>>,
    /// `χ0` at the lower mouth corner of each outlet.
    pub base: Vec<f64>,
    pub outlets: Vec<Option<OutletCarrier>>,
    pub report: CertificationReport,
}

/// Tolerance on the outlet stream constant `c_j¹`.
pub const STREAM_TOLERANCE: f64 = 1e-10;

pub fn assemble_carrier(
    domain: &Arc<ValidatedDomain>,
    corner: &CornerStokes,
    eps: f64,
    mode: CarrierMode,
) -> Result<CarrierField> {
    let spec = &domain.spec;
    let g = &corner.grid;
    let d = g.delta;
    let cuts = choose_cuts(spec, g.x0, g.y0, d)?;
    let rec = stream_from_faces(g, &corner.field.u, &corner.field.v, &cuts)?;
    let outlets = match mode {
        CarrierMode::Hopf => {
            domain.cps.iter().map(|cp| OutletCarrier::new(*cp, eps).map(Some)).collect::<Result<_>>()?
        }
        CarrierMode::Cp => vec![None; domain.cps.len()],
    };

    let mm = (CORNER_LENGTH / d).round() as usize;
    let mut phi = Vec::with_capacity(spec.outlets.len());
    let mut base = Vec::with_capacity(spec.outlets.len());
    let mut c1 = Vec::with_capacity(spec.outlets.len());
    for (j, o) in spec.outlets.iter().enumerate() {
        let nn = (o.width / d).round() as usize;
        let e1 = o.e1();
        let mut cols = Vec::with_capacity(mm + 1);
        let mut worst = 0.0f64;
        for m in 0..=mm {
            let x = m as f64 * d;
            let mut col = vec![0.0; nn + 1];
            for n in 0..nn {
                let z = o.to_global(x, (n as f64 + 0.5) * d);
                let f = g.face_at(z).ok_or_else(|| Error::GridMismatch(format!("no face at {z:?}")))?;
                let s = match f {
                    FacePos::U(_) => e1[0],
                    FacePos::V(_) => e1[1],
                };
                col[n + 1] = col[n] + d * s * corner.field.face(f);
            }
            let c = col[nn] - o.flux;
            if c.abs() > STREAM_TOLERANCE * o.flux.abs().max(1.0) {
                return Err(Error::StreamMismatch { outlet: j, value: c });
            }
            worst = worst.max(c.abs());
            cols.push(col);
        }
        let z = o.to_global(0.0, 0.0);
        let (i0, j0) = node_of(g, z)?;
        base.push(rec.stream.at(i0, j0));
        phi.push(cols);
        c1.push(worst);
    }

    let mut carrier = CarrierField {
        domain: Arc::clone(domain),
        delta: d,
        mode,
        eps,
        corner: corner.grid.clone(),
        chi0: rec.stream,
        cuts,
        phi,
        base,
        outlets,
        report: CertificationReport {
            mode,
            eps,
            t: REPORT_LENGTH,
            max_divergence: 0.0,
            trace_error: 0.0,
            flux_errors: Vec::new(),
            flux_drift: Vec::new(),
            c1,
            stokes_residual: corner.residual.momentum.hypot(corner.residual.continuity),
            stream_mismatch: rec.max_mismatch,
            leray_hopf: None,
        },
    };
    let (max_divergence, trace_error, flux_errors, flux_drift) = carrier.field_checks(REPORT_LENGTH)?;
    carrier.report.max_divergence = max_divergence;
    carrier.report.trace_error = trace_error;
    carrier.report.flux_errors = flux_errors;
    carrier.report.flux_drift = flux_drift;
    Ok(carrier)
}

/// Solve the corner problem and assemble in one step.
pub fn build_carrier(domain: &Arc<ValidatedDomain>, delta: f64, eps: f64, mode: CarrierMode) -> Result<CarrierField> {
    let corner = solve_corner_stokes(domain, delta)?;
    assemble_carrier(domain, &corner, eps, mode)
}

fn node_of(g: &MacGrid, z: [f64; 2]) -> Result<(usize, usize)> {
    let fi = (z[0] - g.x0) / g.delta;
    let fj = (z[1] - g.y0) / g.delta;
    let (i, j) = (fi.round(), fj.round());
    if (fi - i).abs() > 1e-6 || (fj - j).abs() > 1e-6 || i < 0.0 || j < 0.0 || i as usize > g.nx || j as usize > g.ny {
        return Err(Error::GridMismatch(format!("{z:?} is not a lattice node of the corner grid")));
    }
    Ok((i as usize, j as usize))
}

impl CarrierField {
    /// Stream function of `U` at a lattice point of the domain.
    pub fn stream_at(&self, z: [f64; 2]) -> Result<f64> {
        let d = self.delta;
        let tol = 1e-9 * d;
        for (j, o) in self.domain.spec.outlets.iter().enumerate() {
            let (xl, yl) = o.to_local(z);
            if xl > -tol && yl > -tol && yl < o.width + tol {
                let yl = yl.clamp(0.0, o.width);
                let far = match &self.outlets[j] {
                    Some(oc) => oc.stream(yl),
                    None => self.domain.cps[j].stream().eval(yl),
                };
                let s = zeta(xl);
                let near = if s > 0.0 {
                    let m = (xl / d).round() as usize;
                    let n = (yl / d).round() as usize;
                    self.phi[j][m][n]
                } else {
                    0.0
                };
                return Ok(self.base[j] + s * near + (1.0 - s) * far);
            }
        }
        let (i, j) = node_of(&self.corner, z)?;
        let v = self.chi0.at(i, j);
        if v.is_nan() {
            return Err(Error::GridMismatch(format!("{z:?} lies outside the corner region")));
        }
        Ok(v)
    }

    /// `U` and its Dirichlet data on a grid of the same cell size over `Ω^t`.
    pub fn sample(&self, trunc: &TruncatedDomain, grid: &MacGrid) -> Result<CarrierSample> {
        if (grid.delta - self.delta).abs() > 1e-12 * self.delta {
            return Err(Error::GridMismatch(format!("carrier built at {}, grid at {}", self.delta, grid.delta)));
        }
        if trunc.spec() != &self.domain.spec {
            return Err(Error::GridMismatch("truncation belongs to another domain".into()));
        }
        if !(trunc.t > 0.0) {
            return Err(Error::OutOfRange(format!("truncation {} has no caps", trunc.t)));
        }
        let mut chi = NodeStream { nx: grid.nx, ny: grid.ny, chi: vec![f64::NAN; (grid.nx + 1) * (grid.ny + 1)] };
        let faces = (0..grid.n_u_faces())
            .filter(|&p| grid.u_kind[p] != FaceKind::Inactive)
            .map(FacePos::U)
            .chain((0..grid.n_v_faces()).filter(|&p| grid.v_kind[p] != FaceKind::Inactive).map(FacePos::V));
        for f in faces {
            for (i, j) in face_nodes(grid, f) {
                let k = chi.index(i, j);
                if chi.chi[k].is_nan() {
                    chi.chi[k] = self.stream_at(grid.node(i, j))?;
                }
            }
        }
        let jump = |f: FacePos| self.cuts.iter().map(|c| c.jump(grid, f)).sum::<f64>();
        let (u, v) = faces_from_stream(grid, &chi, &jump);
        let field = StaggeredField { u, v, p: vec![0.0; grid.n_cells()] };
        let mut bc = BoundaryData::from_domain(grid, &self.domain.spec, |_, _| [0.0, 0.0]);
        for p in 0..grid.n_u_faces() {
            if grid.u_kind[p] == FaceKind::Boundary {
                bc.u_normal[p] = field.u[p];
            }
        }
        for p in 0..grid.n_v_faces() {
            if grid.v_kind[p] == FaceKind::Boundary {
                bc.v_normal[p] = field.v[p];
            }
        }
        Ok(CarrierSample { field, bc, mode: self.mode })
    }

    /// Truncate, grid and sample in one step.
    pub fn sample_truncation(&self, t: f64) -> Result<(TruncatedDomain, MacGrid, CarrierSample)> {
        let trunc = truncate(&self.domain, t);
        let grid = build_grid(&trunc, self.delta)?;
        let s = self.sample(&trunc, &grid)?;
        Ok((trunc, grid, s))
    }

    /// Divergence, wall trace, mouth fluxes and flux drift on `Ω^t`.
    fn field_checks(&self, t: f64) -> Result<(f64, f64, Vec<f64>, Vec<f64>)> {
        let (trunc, grid, s) = self.sample_truncation(t)?;
        let spec = &self.domain.spec;
        let div = s.field.max_divergence(&grid);
        let walls = BoundaryData::from_domain(&grid, spec, |_, _| [0.0, 0.0]);
        let mut trace = 0.0f64;
        for p in 0..grid.n_u_faces() {
            if let Some(Tag::Wall(_)) = grid.u_tag[p] {
                trace = trace.max((s.field.u[p] - walls.u_normal[p]).abs());
            }
        }
        for p in 0..grid.n_v_faces() {
            if let Some(Tag::Wall(_)) = grid.v_tag[p] {
                trace = trace.max((s.field.v[p] - walls.v_normal[p]).abs());
            }
        }
        let mut errors = Vec::new();
        let mut drift = Vec::new();
        let cols = (t / self.delta).round() as usize;
        for (j, o) in spec.outlets.iter().enumerate() {
            let f0 = cross_section(&trunc, &grid, j, 0.0)?.flux(&s.field);
            errors.push(f0 - o.flux);
            let mut worst = 0.0f64;
            for m in 1..=cols {
                let fx = cross_section(&trunc, &grid, j, m as f64 * self.delta)?.flux(&s.field);
                worst = worst.max((fx - f0).abs());
            }
            drift.push(worst);
        }
        Ok((div, trace, errors, drift))
    }

    /// Recompute the field checks on another truncation.
    pub fn certify(&self, t: f64) -> Result<CertificationReport> {
        let (max_divergence, trace_error, flux_errors, flux_drift) = self.field_checks(t)?;
        Ok(CertificationReport { t, max_divergence, trace_error, flux_errors, flux_drift, ..self.report.clone() })
    }
}

/// Sampled Leray–Hopf ratio of the outlet field of `carrier` on `Ω_j^{a,b}`.
pub fn leray_hopf_certify(
    carrier: &CarrierField,
    j: usize,
    a: f64,
    b: f64,
    n_samples: usize,
    seed: u64,
) -> Result<SlabCertificate> {
    if carrier.mode != CarrierMode::Hopf {
        return Err(Error::Precondition("the Leray–Hopf check needs a hopf-mode carrier".into()));
    }
    if !(a >= 2.0 && b > a) {
        return Err(Error::Precondition(format!("slab [{a}, {b}] must start at 2 or later")));
    }
    let oc = carrier.outlets.get(j).copied().flatten().ok_or_else(|| Error::OutOfRange(format!("outlet {j}")))?;
    Ok(outlet_certificate(&oc, a, b, n_samples, seed, j))
}

pub fn outlet_certificate(
    oc: &OutletCarrier,
    a: f64,
    b: f64,
    n_samples: usize,
    seed: u64,
    j: usize,
) -> SlabCertificate {
    let u1 = |y: f64| oc.velocity(y);
    certify_profile(&u1, oc.cp.h, a, b, &oc.cutoff.breakpoints(), n_samples, seed, j)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub eps: f64,
    pub max_ratio: f64,
    pub reached: bool,
    /// `(ε, max ratio over outlets)` for every ε tried.
    pub history: Vec<(f64, f64)>,
}

/// Halve `ε` from 1/2 until the sampled ratio on every outlet is at most `target`.
pub fn calibrate_epsilon(
    domain: &ValidatedDomain,
    a: f64,
    b: f64,
    n_samples: usize,
    seed: u64,
    target: f64,
) -> Result<Calibration> {
    let mut eps = 0.5;
    let mut history = Vec::new();
    loop {
        let mut worst = 0.0f64;
        for (j, cp) in domain.cps.iter().enumerate() {
            let oc = OutletCarrier::new(*cp, eps)?;
            worst = worst.max(outlet_certificate(&oc, a, b, n_samples, seed, j).max_ratio);
        }
        history.push((eps, worst));
        if worst <= target || eps < 1.0 / 256.0 {
            return Ok(Calibration { eps, max_ratio: worst, reached: worst <= target, history });
        }
        eps *= 0.5;
    }
}
