//! Invading domains: solve on `Ω^{t_k}` for an increasing schedule, then look
//! at how the Dirichlet energy of `w_k` grows along the outlets.

use serde::Serialize;

use crate::carrier::{CarrierField, CarrierMode};
use crate::error::{Error, Result};
use crate::field::{BoundaryData, FaceForce, StaggeredField};
use crate::geometry::TruncatedDomain;
use crate::grid::{FaceKind, MacGrid};
use crate::ops::dirichlet_energy;
use crate::solver::{solve_steady_ns, CarrierSample, SolveResult, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub times: Vec<f64>,
    pub delta: f64,
    pub mode: CarrierMode,
}

/// `"a+bk,K=n"` gives `t_k = a + b k` for `k = 0..=n`; a comma list of numbers
/// is taken as the times themselves.
pub fn parse_schedule(s: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::ValidationError { key: "schedule".into(), reason: format!("{why} in `{s}`") };
    let s = s.trim();
    if s.contains('k') {
        let (lin, count) = s.split_once(',').ok_or_else(|| bad("missing `,K=`"))?;
        let n: usize = count
            .trim()
            .strip_prefix("K=")
            .ok_or_else(|| bad("expected `K=`"))?
            .trim()
            .parse()
            .map_err(|_| bad("bad K"))?;
        let lin = lin.replace(' ', "");
        let body = lin.strip_suffix('k').ok_or_else(|| bad("expected `a+bk`"))?;
        let split = body.rfind(['+', '-']).filter(|&i| i > 0).ok_or_else(|| bad("expected `a+bk`"))?;
        let a: f64 = body[..split].parse().map_err(|_| bad("bad offset"))?;
        let b: f64 = match &body[split..] {
            "+" => 1.0,
            "-" => -1.0,
            r => r.parse().map_err(|_| bad("bad step"))?,
        };
        Ok((0..=n).map(|k| a + b * k as f64).collect())
    } else {
        s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad("bad number"))).collect()
    }
}

impl Schedule {
    pub fn new(times: Vec<f64>, delta: f64, mode: CarrierMode) -> Result<Schedule> {
        let bad = |reason: String| Error::ValidationError { key: "schedule".into(), reason };
        if times.is_empty() {
            return Err(bad("no truncations".into()));
        }
        if times.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(bad("truncations must be positive".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(bad("truncations must increase strictly".into()));
        }
        if !(delta > 0.0) {
            return Err(Error::ValidationError { key: "delta".into(), reason: format!("{delta} is not positive") });
        }
        for &t in &times {
            let s = t / delta;
            if (s - s.round()).abs() > 1e-9 * s.max(1.0) {
                return Err(bad(format!("t = {t} is not a multiple of the cell size {delta}")));
            }
        }
        Ok(Schedule { times, delta, mode })
    }

    pub fn from_formula(formula: &str, delta: f64, mode: CarrierMode) -> Result<Schedule> {
        Schedule::new(parse_schedule(formula)?, delta, mode)
    }
}

#[derive(Debug, Clone)]
pub struct InvadingStep {
    pub k: usize,
    pub t: f64,
    pub trunc: TruncatedDomain,
    pub grid: MacGrid,
    pub carrier: CarrierSample,
    pub force: FaceForce,
    pub result: SolveResult,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    /// `J_k` stays bounded.
    Bounded,
    /// `J_k` keeps growing.
    Unbounded,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::Bounded => "I",
            Case::Unbounded => "II",
        }
    }
}

/// Growth factor and run length that mark `J_k` as unbounded.
pub const GROWTH_FACTOR: f64 = 1.05;
pub const GROWTH_RUN: usize = 3;

/// Unbounded when `J_{k+1}/J_k > 1.05` for three consecutive `k`.
pub fn classify(j: &[f64]) -> Case {
    let mut run = 0;
    for w in j.windows(2) {
        if w[0] > 0.0 && w[1] / w[0] > GROWTH_FACTOR {
            run += 1;
            if run >= GROWTH_RUN {
                return Case::Unbounded;
            }
        } else {
            run = 0;
        }
    }
    Case::Bounded
}

#[derive(Debug)]
pub struct InvadingRun {
    pub steps: Vec<InvadingStep>,
    /// First failure, if the run stopped early.
    pub failure: Option<(usize, Error)>,
    pub case: Case,
}

impl InvadingRun {
    pub fn j(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.result.j).collect()
    }
}

/// Carry face and cell values over to a larger grid on the same lattice.
/// Faces that are not interior on the new grid are left at 0.
pub fn extend_field(from: &MacGrid, w: &StaggeredField, to: &MacGrid) -> StaggeredField {
    let mut out = StaggeredField::zeros(to);
    let (ox, oy) = from.lattice_origin();
    let (nx, ny) = to.lattice_origin();
    let (di, dj) = (nx - ox, ny - oy);
    let map = |i: usize, j: usize, wmax: usize, hmax: usize| {
        let (a, b) = (i as i64 + di, j as i64 + dj);
        (a >= 0 && b >= 0 && (a as usize) < wmax && (b as usize) < hmax).then_some((a as usize, b as usize))
    };
    for &p in &to.u_of {
        let (i, j) = to.u_ij(p);
        if let Some((a, b)) = map(i, j, from.nx + 1, from.ny) {
            let q = from.u_pos(a, b);
            if from.u_kind[q] == FaceKind::Interior {
                out.u[p] = w.u[q];
            }
        }
    }
    for &p in &to.v_of {
        let (i, j) = to.v_ij(p);
        if let Some((a, b)) = map(i, j, from.nx, from.ny + 1) {
            let q = from.v_pos(a, b);
            if from.v_kind[q] == FaceKind::Interior {
                out.v[p] = w.v[q];
            }
        }
    }
    for &c in &to.p_of {
        let (i, j) = to.p_ij(c);
        if let Some((a, b)) = map(i, j, from.nx, from.ny) {
            let q = from.p_pos(a, b);
            if from.cells[q].is_fluid() {
                out.p[c] = w.p[q];
            }
        }
    }
    out
}

/// Solve on every truncation of the schedule, warm-starting each solve from the
/// previous perturbation. Stops at the first failure and keeps what was done.
pub fn run_invading(
    carrier: &CarrierField,
    schedule: &Schedule,
    force: &dyn Fn(&MacGrid) -> FaceForce,
    opts: &SolverOptions,
) -> Result<InvadingRun> {
    if carrier.mode != schedule.mode {
        return Err(Error::Precondition(format!(
            "carrier is in {} mode, schedule asks for {}",
            carrier.mode.as_str(),
            schedule.mode.as_str()
        )));
    }
    if (carrier.delta - schedule.delta).abs() > 1e-12 * carrier.delta {
        return Err(Error::GridMismatch(format!("carrier at {}, schedule at {}", carrier.delta, schedule.delta)));
    }
    let mut steps: Vec<InvadingStep> = Vec::new();
    let mut failure = None;
    for (k, &t) in schedule.times.iter().enumerate() {
        let attempt = (|| {
            let (trunc, grid, sample) = carrier.sample_truncation(t)?;
            let f = force(&grid);
            let w0 = steps.last().map(|s| extend_field(&s.grid, &s.result.w, &grid));
            let result = solve_steady_ns(&grid, &sample, &f, opts, w0.as_ref())?;
            Ok::<_, Error>(InvadingStep { k, t, trunc, grid, carrier: sample, force: f, result })
        })();
        match attempt {
            Ok(s) => steps.push(s),
            Err(e) => {
                failure = Some((k, e));
                break;
            }
        }
    }
    let case = classify(&steps.iter().map(|s| s.result.j).collect::<Vec<_>>());
    Ok(InvadingRun { steps, failure, case })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthProfile {
    pub t: Vec<f64>,
    /// `D(t)`: Dirichlet energy of `w` over `Ω^t`.
    pub d: Vec<f64>,
    /// Slab energies `e(τ) = D(τ) − D(τ − 1)`, `NaN` where `τ − 1` is not sampled.
    pub e: Vec<f64>,
    /// Running unit-window average `∫_{t−1}^t D`, `NaN` where the window is not sampled.
    pub h: Vec<f64>,
    /// Least-squares slope of `D` over the samples with `t ≥ fit_from`; `NaN`
    /// when fewer than two samples are in range.
    pub c0: f64,
    /// Smallest intercept with `D(t) ≤ c0 t + c1` at every sample.
    pub c1: f64,
}

/// Energy of `w` restricted to `Ω^t`.
pub fn energy_up_to(grid: &MacGrid, w: &StaggeredField, t: f64) -> f64 {
    let zero = BoundaryData::zeros(grid);
    dirichlet_energy(grid, &w.u, &w.v, &zero, &|c| grid.cell_in_truncation(c, t))
}

/// `D`, `e` and `h` on `t_grid`. The linear fit only uses `t ≥ fit_from`, so
/// the corner region, where the carrier is not translation invariant, can be
/// kept out of the slope; the intercept still covers every sample.
pub fn growth_profile(grid: &MacGrid, w: &StaggeredField, t_grid: &[f64], fit_from: f64) -> GrowthProfile {
    let t: Vec<f64> = t_grid.to_vec();
    let d: Vec<f64> = t.iter().map(|&s| energy_up_to(grid, w, s)).collect();
    let find = |s: f64| t.iter().position(|&x| (x - s).abs() < 1e-9);
    let e = t.iter().zip(&d).map(|(&s, &ds)| find(s - 1.0).map_or(f64::NAN, |i| ds - d[i])).collect();
    let h = t
        .iter()
        .map(|&s| {
            let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i] >= s - 1.0 - 1e-9 && t[i] <= s + 1e-9).collect();
            if idx.len() < 2 || (t[idx[0]] - (s - 1.0)).abs() > 1e-9 {
                return f64::NAN;
            }
            idx.windows(2).map(|p| 0.5 * (d[p[0]] + d[p[1]]) * (t[p[1]] - t[p[0]])).sum()
        })
        .collect();
    let (ft, fd): (Vec<f64>, Vec<f64>) = t.iter().zip(&d).filter(|(&s, _)| s >= fit_from - 1e-9).unzip();
    let c0 = if ft.len() < 2 { f64::NAN } else { linear_envelope(&ft, &fd).0 };
    let c1 = if c0.is_nan() {
        f64::NAN
    } else {
        t.iter().zip(&d).map(|(a, b)| b - c0 * a).fold(f64::NEG_INFINITY, f64::max)
    };
    GrowthProfile { t, d, e, h, c0, c1 }
}

/// Least-squares slope and the intercept that puts every point under the line.
pub fn linear_envelope(t: &[f64], d: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    if t.len() < 2 {
        return (0.0, d.first().copied().unwrap_or(0.0));
    }
    let mt = t.iter().sum::<f64>() / n;
    let md = d.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(d).map(|(a, b)| (a - mt) * (b - md)).sum();
    let sxx: f64 = t.iter().map(|a| (a - mt) * (a - mt)).sum();
    let c0 = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let c1 = t.iter().zip(d).map(|(a, b)| b - c0 * a).fold(f64::NEG_INFINITY, f64::max);
    (c0, c1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedStep {
    pub k: usize,
    pub j: f64,
    /// Dirichlet norm of `ŵ_k` over the whole truncation (1 up to rounding).
    pub unit_norm: f64,
    /// `L²` norm of `ŵ_k` over the window.
    pub window_l2: f64,
    /// Dirichlet norm of `ŵ_k` over the window.
    pub window_dirichlet: f64,
}

fn l2_norm(grid: &MacGrid, w: &StaggeredField, region: &dyn Fn(usize) -> bool) -> f64 {
    let d2 = grid.delta * grid.delta;
    let inside = |cells: [Option<usize>; 2]| crate::ops::face_in_region(cells, region);
    let su: f64 = grid.u_of.iter().filter(|&&p| inside(grid.u_cells(p))).map(|&p| w.u[p] * w.u[p]).sum();
    let sv: f64 = grid.v_of.iter().filter(|&&p| inside(grid.v_cells(p))).map(|&p| w.v[p] * w.v[p]).sum();
    ((su + sv) * d2).sqrt()
}

/// `ŵ_k = w_k / J_k` and its size on the fixed window `Ω^{window}`.
/// Only meaningful when `J_k` grows, so a bounded sequence is refused.
pub fn normalized_view(steps: &[(&MacGrid, &StaggeredField)], window: f64) -> Result<Vec<NormalizedStep>> {
    let zero_bc = |g: &MacGrid| BoundaryData::zeros(g);
    let js: Vec<f64> =
        steps.iter().map(|(g, w)| dirichlet_energy(g, &w.u, &w.v, &zero_bc(g), &|_| true).max(0.0).sqrt()).collect();
    if classify(&js) != Case::Unbounded {
        return Err(Error::Precondition(
            "J_k stays bounded; the normalized sequence is only defined when it grows".into(),
        ));
    }
    let mut out = Vec::with_capacity(steps.len());
    for (k, ((g, w), &j)) in steps.iter().zip(&js).enumerate() {
        if j < 1e-14 {
            return Err(Error::DegenerateNormalization(j));
        }
        let hat = w.scale(1.0 / j);
        let zero = zero_bc(g);
        let inw = |c: usize| g.cell_in_truncation(c, window);
        out.push(NormalizedStep {
            k,
            j,
            unit_norm: dirichlet_energy(g, &hat.u, &hat.v, &zero, &|_| true).max(0.0).sqrt(),
            window_l2: l2_norm(g, &hat, &inw),
            window_dirichlet: dirichlet_energy(g, &hat.u, &hat.v, &zero, &inw).max(0.0).sqrt(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonOutcome {
    pub hypotheses_hold: bool,
    pub conclusion_holds: bool,
    /// Human-readable list of failed checks with the sample time.
    pub failures: Vec<String>,
}

/// Sampled check of the one-dimensional comparison principle: if
/// `h ≤ Ψ(h′) + φ/2` and `φ ≥ 2Ψ(φ′)` on `[t0, T]` and `h(T) ≤ φ(T)`, then
/// `h ≤ φ` on `[t0, T]`. Derivatives are centred differences (one-sided at the
/// ends of the grid).
pub fn comparison_check(
    h: &[f64],
    phi: &[f64],
    psi: &dyn Fn(f64) -> f64,
    t0: f64,
    t_end: f64,
) -> Result<ComparisonOutcome> {
    let n = h.len();
    if n < 16 || phi.len() != n {
        return Err(Error::GridTooCoarse(n.min(phi.len())));
    }
    let dt = (t_end - t0) / (n - 1) as f64;
    let deriv = |f: &[f64], i: usize| {
        if i == 0 {
            (f[1] - f[0]) / dt
        } else if i == n - 1 {
            (f[n - 1] - f[n - 2]) / dt
        } else {
            (f[i + 1] - f[i - 1]) / (2.0 * dt)
        }
    };
    let scale = h.iter().chain(phi).fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-12 * scale;
    let mut failures = Vec::new();
    for i in 0..n {
        let t = t0 + i as f64 * dt;
        if h[i] > psi(deriv(h, i)) + 0.5 * phi[i] + tol {
            failures.push(format!("h <= Psi(h') + phi/2 fails at t = {t}"));
        }
        if phi[i] < 2.0 * psi(deriv(phi, i)) - tol {
            failures.push(format!("phi >= 2 Psi(phi') fails at t = {t}"));
        }
    }
    if h[n - 1] > phi[n - 1] + tol {
        failures.push(format!("h(T) <= phi(T) fails at t = {t_end}"));
    }
    let conclusion_holds = h.iter().zip(phi).all(|(a, b)| *a <= *b + tol);
    Ok(ComparisonOutcome { hypotheses_hold: failures.is_empty(), conclusion_holds, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_formula() {
        assert_eq!(parse_schedule("2+4k,K=6").unwrap(), vec![2.0, 6.0, 10.0, 14.0, 18.0, 22.0, 26.0]);
        assert_eq!(parse_schedule("3, 5,8").unwrap(), vec![3.0, 5.0, 8.0]);
        assert_eq!(parse_schedule("1.5+k,K=2").unwrap(), vec![1.5, 2.5, 3.5]);
        assert!(parse_schedule("2+4k").is_err());
        assert!(Schedule::new(vec![2.0, 2.0], 0.5, CarrierMode::Cp).is_err());
        assert!(Schedule::new(vec![2.0, 2.3], 0.5, CarrierMode::Cp).is_err());
    }

    #[test]
    fn growth_rule() {
        assert_eq!(classify(&[1.0, 1.1, 1.2, 1.3]), Case::Unbounded);
        assert_eq!(classify(&[1.0, 1.1, 1.1, 1.2, 1.3]), Case::Bounded);
        assert_eq!(classify(&[0.0, 0.0, 0.0, 0.0]), Case::Bounded);
    }

    #[test]
    fn envelope_of_a_line() {
        let t = [1.0, 2.0, 3.0, 4.0];
        let d = [3.0, 5.0, 7.0, 9.0];
        let (c0, c1) = linear_envelope(&t, &d);
        assert!((c0 - 2.0).abs() < 1e-14 && (c1 - 1.0).abs() < 1e-14);
    }
}
