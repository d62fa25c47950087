//! Property checks of a whole run spec: exact outlet flows, carrier, one
//! solve, the invading sequence and the diagnostics the spec turns on.
//!
//! The per-stage builders are public so a driver can assert the same limits
//! after computing a stage on its own.

use std::sync::Arc;

use serde::Serialize;

use crate::carrier::{build_carrier, leray_hopf_certify, Calibration, CarrierField, CarrierMode, STREAM_TOLERANCE};
use crate::config::RunSpec;
use crate::diagnostics::{
    asymptotics_report, energy_identity_residual, uniqueness_experiment, AsymptoticsReport, EnergyBalance,
    UniquenessOutcome,
};
use crate::error::Result;
use crate::exact::{cp_discrete_residual, cp_flux};
use crate::geometry::{cross_section, TruncatedDomain, ValidatedDomain};
use crate::grid::MacGrid;
use crate::invading::{energy_up_to, run_invading, InvadingRun};
use crate::solver::{solve_steady_ns, SolveResult};

/// Bound on the sampled Leray–Hopf ratio.
pub const LERAY_HOPF_BOUND: f64 = 0.125;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub value: f64,
    pub limit: f64,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, value: f64, limit: f64, detail: String) -> Check {
        Check { name: name.into(), pass: value <= limit, value, limit, detail }
    }
}

fn worst(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Outlet profiles carry their flux and solve the discrete equations.
pub fn exact_checks(spec: &RunSpec, domain: &ValidatedDomain) -> Result<Vec<Check>> {
    let mut flux_gap = 0.0f64;
    let mut discrete = 0.0f64;
    for (o, cp) in spec.domain.outlets.iter().zip(&domain.cps) {
        flux_gap = flux_gap.max((cp_flux(cp) - o.flux).abs());
        let n = (o.width / spec.delta).round() as usize;
        let g = MacGrid::rectangle(4 * n, n, spec.delta)?;
        discrete = discrete.max(cp_discrete_residual(cp, &g)?.momentum);
    }
    Ok(vec![
        Check::new("exact.flux", flux_gap, 1e-12, format!("{} outlets", domain.cps.len())),
        Check::new("exact.discrete_residual", discrete, 1e-9, format!("cell size {}", spec.delta)),
    ])
}

/// Certification of the carrier, plus the sampled Leray–Hopf bound when the
/// spec asks for samples.
pub fn carrier_checks(spec: &RunSpec, carrier: &CarrierField, cal: Option<&Calibration>) -> Result<Vec<Check>> {
    let r = &carrier.report;
    let how = format!("{} mode, eps {}", r.mode.as_str(), r.eps);
    let mut out = vec![
        Check::new("carrier.divergence", r.max_divergence, 1e-12, how.clone()),
        Check::new("carrier.trace", r.trace_error, 1e-10, how.clone()),
        Check::new("carrier.flux", worst(&r.flux_errors), 1e-10, how.clone()),
        Check::new("carrier.flux_drift", worst(&r.flux_drift), 1e-12, how.clone()),
        Check::new("carrier.stream_constant", worst(&r.c1), STREAM_TOLERANCE, how),
    ];
    let c = &spec.carrier;
    if carrier.mode == CarrierMode::Hopf && c.samples > 0 {
        let ratio = leray_hopf_ratios(spec, carrier)?.into_iter().fold(0.0, f64::max);
        let how = match cal {
            Some(k) => format!("calibrated in {} steps", k.history.len()),
            None => "eps from the config".into(),
        };
        out.push(Check::new("carrier.leray_hopf", ratio, LERAY_HOPF_BOUND, format!("{} samples, {how}", c.samples)));
    }
    Ok(out)
}

/// Largest sampled ratio per outlet on the configured slab.
pub fn leray_hopf_ratios(spec: &RunSpec, carrier: &CarrierField) -> Result<Vec<f64>> {
    let c = &spec.carrier;
    let seed = c.seed.unwrap_or_default();
    (0..spec.domain.outlets.len())
        .map(|j| Ok(leray_hopf_certify(carrier, j, c.slab[0], c.slab[1], c.samples, seed)?.max_ratio))
        .collect()
}

/// A converged solve meets its tolerance and carries the outlet fluxes.
pub fn solve_checks(spec: &RunSpec, trunc: &TruncatedDomain, grid: &MacGrid, res: &SolveResult) -> Result<Vec<Check>> {
    let t = trunc.t;
    let iters = format!("t {t}, {} Picard + {} Newton", res.picard_iterations, res.newton_iterations);
    let mut drift = 0.0f64;
    for (j, o) in spec.domain.outlets.iter().enumerate() {
        for m in 0..=(t / grid.delta).round() as usize {
            let q = cross_section(trunc, grid, j, m as f64 * grid.delta)?.flux(&res.u);
            drift = drift.max((q - o.flux).abs());
        }
    }
    Ok(vec![
        Check::new("solve.momentum", res.residual.momentum, spec.solver.tolerance, iters.clone()),
        Check::new("solve.continuity", res.residual.continuity, 1e-10, iters),
        Check::new("solve.outlet_flux", drift, 1e-10, format!("J {:.6e}", res.j)),
    ])
}

pub fn energy_check(spec: &RunSpec, e: &EnergyBalance) -> Check {
    Check::new("diagnose.energy", e.residual, spec.diagnostics.energy_tolerance, format!("t {}", e.t))
}

/// `D(t_k) = J_k²` and `D` nondecreasing on every step.
pub fn invading_check(run: &InvadingRun) -> Check {
    let mut gap = 0.0f64;
    let mut monotone = true;
    for s in &run.steps {
        let d: Vec<f64> = (0..=s.t.floor() as usize).map(|x| energy_up_to(&s.grid, &s.result.w, x as f64)).collect();
        monotone &= d.windows(2).all(|w| w[1] >= w[0]);
        let j2 = s.result.j * s.result.j;
        gap = gap.max((energy_up_to(&s.grid, &s.result.w, s.t) - j2).abs() / j2.max(f64::MIN_POSITIVE));
    }
    let j = run.j();
    let span = match (j.first(), j.last()) {
        (Some(a), Some(b)) => format!("J_k from {a:.4e} to {b:.4e}"),
        _ => "no steps".into(),
    };
    let mut c = Check::new("invade.energy", gap, 1e-10, format!("case {}, {span}", run.case.label()));
    c.pass &= monotone && run.failure.is_none();
    c
}

pub fn asymptotics_check(spec: &RunSpec, rep: &AsymptoticsReport) -> Check {
    let dg = &spec.diagnostics;
    let rel = rep.outlets.iter().map(|o| o.final_deviation / o.max_cp.max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
    let mut c = Check::new(
        "diagnose.asymptotics",
        rel,
        dg.asymptotics_threshold,
        format!("t {}, {} carrier", rep.t, dg.asymptotics_mode.as_str()),
    );
    c.pass = rep.passed();
    c
}

pub fn uniqueness_check(spec: &RunSpec, u: &UniquenessOutcome) -> Check {
    Check::new(
        "diagnose.uniqueness",
        u.discrepancy,
        spec.diagnostics.uniqueness_tolerance,
        format!("J {:.6e} vs {:.6e}", u.j_a, u.j_b),
    )
}

/// Solve at the asymptotics length with the configured carrier mode and
/// report the deviation from the outlet profiles.
pub fn run_asymptotics(
    spec: &RunSpec,
    domain: &Arc<ValidatedDomain>,
    carrier: &CarrierField,
) -> Result<AsymptoticsReport> {
    let dg = &spec.diagnostics;
    let other;
    let c = if dg.asymptotics_mode == carrier.mode {
        carrier
    } else {
        other = build_carrier(domain, spec.delta, carrier.eps, dg.asymptotics_mode)?;
        &other
    };
    let (trunc, grid, sample) = c.sample_truncation(dg.asymptotics_length)?;
    let res = solve_steady_ns(&grid, &sample, &spec.force_on(&grid), &spec.solver, None)?;
    asymptotics_report(&trunc, &grid, &res.u, dg.asymptotics_threshold)
}

/// Run every check, handing each to `emit` as soon as it is known. An error
/// (a solve that does not converge, say) stops the run; checks already
/// emitted stay emitted.
pub fn verify(spec: &RunSpec, emit: &mut dyn FnMut(&Check)) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let mut push = |cs: Vec<Check>| {
        for c in cs {
            emit(&c);
            out.push(c);
        }
    };
    let domain = Arc::new(spec.validated_domain()?);
    push(exact_checks(spec, &domain)?);
    let (carrier, cal) = spec.carrier(&domain)?;
    push(carrier_checks(spec, &carrier, cal.as_ref())?);

    let schedule = spec.schedule()?;
    let t0 = schedule.times[0];
    let (trunc, grid, sample) = carrier.sample_truncation(t0)?;
    let force = spec.force_on(&grid);
    let res = solve_steady_ns(&grid, &sample, &force, &spec.solver, None)?;
    push(solve_checks(spec, &trunc, &grid, &res)?);
    let dg = &spec.diagnostics;
    if dg.energy {
        push(vec![energy_check(spec, &energy_identity_residual(&grid, &sample, &res, &force, dg.energy_at * t0))]);
    }

    let run = run_invading(&carrier, &schedule, &|g| spec.force_on(g), &spec.solver)?;
    if let Some((_, e)) = run.failure {
        return Err(e);
    }
    push(vec![invading_check(&run)]);

    if dg.asymptotics {
        push(vec![asymptotics_check(spec, &run_asymptotics(spec, &domain, &carrier)?)]);
    }
    if dg.uniqueness {
        let u = uniqueness_experiment(
            &grid,
            &sample,
            &force,
            &spec.solver,
            dg.perturbation,
            spec.carrier.seed.unwrap_or(0),
        )?;
        push(vec![uniqueness_check(spec, &u)]);
    }
    Ok(out)
}
