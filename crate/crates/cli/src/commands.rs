use std::sync::Arc;

use junction_flow::config::RunSpec;
use junction_flow::diagnostics::{energy_identity_residual, uniqueness_experiment, uniqueness_sweep};
use junction_flow::exact::{cp_discrete_residual, cp_flux};
use junction_flow::field::dump;
use junction_flow::geometry::ValidatedDomain;
use junction_flow::grid::MacGrid;
use junction_flow::invading::{growth_profile, run_invading};
use junction_flow::report::{num, Artifacts, Provenance};
use junction_flow::solver::solve_steady_ns;
use junction_flow::verify::{self, Check};

use crate::{Failure, Loaded};

fn artifacts(run: &Loaded) -> Artifacts {
    Artifacts::new(&run.out, Provenance::new(&run.spec.to_toml(), run.spec.carrier.seed))
}

fn domain(spec: &RunSpec) -> Result<Arc<ValidatedDomain>, Failure> {
    Ok(Arc::new(spec.validated_domain()?))
}

fn print_check(c: &Check) {
    let tag = if c.pass { "PASS" } else { "FAIL" };
    println!("{tag} {} {} (limit {}) {}", c.name, num(c.value), num(c.limit), c.detail);
}

/// Print the checks and fail with their count if any did not pass.
fn settle(checks: &[Check]) -> Result<(), Failure> {
    checks.iter().for_each(print_check);
    match checks.iter().filter(|c| !c.pass).count() {
        0 => Ok(()),
        n => Err(Failure::Checks(n)),
    }
}

fn check_rows(checks: &[Check]) -> Vec<Vec<String>> {
    checks
        .iter()
        .map(|c| vec![c.name.clone(), c.pass.to_string(), num(c.value), num(c.limit), c.detail.clone()])
        .collect()
}

const CHECK_HEADER: [&str; 5] = ["check", "pass", "value", "limit", "detail"];

pub fn exact(run: &Loaded) -> Result<(), Failure> {
    let spec = &run.spec;
    let d = domain(spec)?;
    let mut rows = Vec::new();
    for (j, (o, cp)) in spec.domain.outlets.iter().zip(&d.cps).enumerate() {
        let n = (o.width / spec.delta).round() as usize;
        let r = cp_discrete_residual(cp, &MacGrid::rectangle(4 * n, n, spec.delta)?)?;
        rows.push(vec![
            j.to_string(),
            num(cp.h),
            num(cp.b0),
            num(cp.b1),
            num(cp.flux),
            num(cp.a),
            num(cp.b),
            num(cp.pressure_slope()),
            num(cp_flux(cp)),
            num(r.momentum),
            num(r.continuity),
        ]);
    }
    let mut art = artifacts(run);
    let header =
        ["outlet", "h", "b0", "b1", "flux", "a", "b", "pressure_slope", "closed_flux", "momentum", "continuity"];
    let path = art.csv("exact.csv", &header, rows)?;
    println!("wrote {}", path.display());
    settle(&verify::exact_checks(spec, &d)?)
}

pub fn carrier(run: &Loaded) -> Result<(), Failure> {
    let spec = &run.spec;
    let d = domain(spec)?;
    let (carrier, cal) = spec.carrier(&d)?;
    let mut art = artifacts(run);
    let r = &carrier.report;
    let summary = [
        ("mode", r.mode.as_str().to_string()),
        ("eps", num(r.eps)),
        ("t", num(r.t)),
        ("max_divergence", num(r.max_divergence)),
        ("trace_error", num(r.trace_error)),
        ("stokes_residual", num(r.stokes_residual)),
        ("stream_mismatch", num(r.stream_mismatch)),
    ];
    art.csv("carrier_summary.csv", &["quantity", "value"], summary.iter().map(|(k, v)| [k.to_string(), v.clone()]))?;
    let ratios = if carrier.mode == junction_flow::carrier::CarrierMode::Hopf && spec.carrier.samples > 0 {
        Some(verify::leray_hopf_ratios(spec, &carrier)?)
    } else {
        None
    };
    let rows = (0..spec.domain.outlets.len()).map(|j| {
        vec![
            j.to_string(),
            num(r.flux_errors[j]),
            num(r.flux_drift[j]),
            num(r.c1[j]),
            ratios.as_ref().map_or(String::new(), |x| num(x[j])),
        ]
    });
    art.csv("carrier_report.csv", &["outlet", "flux_error", "flux_drift", "c1", "leray_hopf_ratio"], rows)?;
    if let Some(k) = &cal {
        art.csv("calibration.csv", &["eps", "max_ratio"], k.history.iter().map(|(e, m)| [num(*e), num(*m)]))?;
    }
    let t0 = spec.schedule()?.times[0];
    let (_, grid, sample) = carrier.sample_truncation(t0)?;
    art.text("carrier_field.txt", &dump(&grid, &sample.field))?;
    for p in &art.written {
        println!("wrote {}", p.display());
    }
    settle(&verify::carrier_checks(spec, &carrier, cal.as_ref())?)
}

pub fn solve(run: &Loaded, t: Option<f64>) -> Result<(), Failure> {
    let spec = &run.spec;
    let d = domain(spec)?;
    let (carrier, _) = spec.carrier(&d)?;
    let t = match t {
        Some(t) => t,
        None => spec.schedule()?.times[0],
    };
    let (trunc, grid, sample) = carrier.sample_truncation(t)?;
    let force = spec.force_on(&grid);
    let res = solve_steady_ns(&grid, &sample, &force, &spec.solver, None)?;
    let mut art = artifacts(run);
    art.text("solution_u.txt", &dump(&grid, &res.u))?;
    art.text("solution_w.txt", &dump(&grid, &res.w))?;
    let hist =
        res.history.iter().map(|h| [h.stage.to_string(), h.iteration.to_string(), num(h.momentum), num(h.continuity)]);
    art.csv("residual_history.csv", &["stage", "iteration", "momentum", "continuity"], hist)?;
    let summary = [[
        num(t),
        num(res.j),
        res.picard_iterations.to_string(),
        res.newton_iterations.to_string(),
        num(res.residual.momentum),
        num(res.residual.continuity),
    ]];
    art.csv("solve_summary.csv", &["t", "j", "picard", "newton", "momentum", "continuity"], summary)?;
    for p in &art.written {
        println!("wrote {}", p.display());
    }
    println!("t {t}: J = {}", num(res.j));
    settle(&verify::solve_checks(spec, &trunc, &grid, &res)?)
}

pub fn invade(run: &Loaded) -> Result<(), Failure> {
    let spec = &run.spec;
    let d = domain(spec)?;
    let (carrier, _) = spec.carrier(&d)?;
    let schedule = spec.schedule()?;
    let inv = run_invading(&carrier, &schedule, &|g| spec.force_on(g), &spec.solver)?;
    let mut art = artifacts(run);
    let steps = inv.steps.iter().map(|s| {
        [
            s.k.to_string(),
            num(s.t),
            num(s.result.j),
            s.result.picard_iterations.to_string(),
            s.result.newton_iterations.to_string(),
        ]
    });
    art.csv("invade_steps.csv", &["k", "t", "j", "picard", "newton"], steps)?;
    let mut growth = Vec::new();
    let mut fits = Vec::new();
    for s in &inv.steps {
        let tg: Vec<f64> = (0..=s.t.floor() as usize).map(|x| x as f64).collect();
        let gp = growth_profile(&s.grid, &s.result.w, &tg, 2.0);
        for i in 0..gp.t.len() {
            growth.push([s.k.to_string(), num(gp.t[i]), num(gp.d[i]), num(gp.e[i]), num(gp.h[i])]);
        }
        fits.push([s.k.to_string(), num(s.t), num(gp.c0), num(gp.c1)]);
    }
    art.csv("growth.csv", &["k", "t", "d", "e", "h"], growth)?;
    art.csv("growth_fit.csv", &["k", "t_k", "c0", "c1"], fits)?;
    for p in &art.written {
        println!("wrote {}", p.display());
    }
    println!("case {} over {} truncations", inv.case.label(), inv.steps.len());
    if let Some((k, e)) = inv.failure {
        eprintln!("step {k} failed");
        return Err(e.into());
    }
    settle(&[verify::invading_check(&inv)])
}

pub fn diagnose(run: &Loaded) -> Result<(), Failure> {
    let spec = &run.spec;
    let dg = &spec.diagnostics;
    let d = domain(spec)?;
    let (carrier, _) = spec.carrier(&d)?;
    let t0 = spec.schedule()?.times[0];
    let (_, grid, sample) = carrier.sample_truncation(t0)?;
    let force = spec.force_on(&grid);
    let mut art = artifacts(run);
    let mut checks = Vec::new();
    // Write what is done before a later stage can fail.
    let outcome = (|| -> Result<(), Failure> {
        let res = solve_steady_ns(&grid, &sample, &force, &spec.solver, None)?;
        if dg.energy {
            let e = energy_identity_residual(&grid, &sample, &res, &force, dg.energy_at * t0);
            let header = [
                "t",
                "dirichlet",
                "forcing",
                "transport",
                "viscous_flux",
                "convective_flux",
                "pressure_flux",
                "residual",
            ];
            let row = [
                e.t,
                e.dirichlet,
                e.forcing,
                e.transport,
                e.viscous_flux,
                e.convective_flux,
                e.pressure_flux,
                e.residual,
            ];
            art.csv("energy.csv", &header, [row.map(num)])?;
            checks.push(verify::energy_check(spec, &e));
        }
        if dg.asymptotics {
            let rep = verify::run_asymptotics(spec, &d, &carrier)?;
            let mut rows = Vec::new();
            let mut slabs = Vec::new();
            for o in &rep.outlets {
                rows.extend(o.x.iter().zip(&o.deviation).map(|(x, v)| [o.outlet.to_string(), num(*x), num(*v)]));
                slabs.extend(o.slab_seminorm.iter().map(|(tau, n)| [o.outlet.to_string(), num(*tau), num(*n)]));
            }
            art.csv("asymptotics.csv", &["outlet", "x", "deviation"], rows)?;
            art.csv("asymptotics_slabs.csv", &["outlet", "tau", "seminorm"], slabs)?;
            checks.push(verify::asymptotics_check(spec, &rep));
        }
        if dg.uniqueness {
            let seed = spec.carrier.seed.unwrap_or(0);
            let u = uniqueness_experiment(&grid, &sample, &force, &spec.solver, dg.perturbation, seed)?;
            art.csv("uniqueness.csv", &["discrepancy", "j_a", "j_b"], [[num(u.discrepancy), num(u.j_a), num(u.j_b)]])?;
            checks.push(verify::uniqueness_check(spec, &u));
            if !dg.sweep.is_empty() {
                let sw = uniqueness_sweep(
                    &carrier,
                    t0,
                    &dg.sweep,
                    &spec.solver,
                    dg.perturbation,
                    seed,
                    dg.uniqueness_tolerance,
                )?;
                let rows = sw.rows.iter().map(|r| {
                    [num(r.amplitude), r.discrepancy.map_or(String::new(), num), r.error.clone().unwrap_or_default()]
                });
                art.csv("uniqueness_sweep.csv", &["amplitude", "discrepancy", "error"], rows)?;
                match sw.first_split {
                    Some(a) => println!("runs first disagree at amplitude {}", num(a)),
                    None => println!("runs agree at every swept amplitude"),
                }
            }
        }
        Ok(())
    })();
    for p in &art.written {
        println!("wrote {}", p.display());
    }
    outcome?;
    settle(&checks)
}

pub fn verify(run: &Loaded) -> Result<(), Failure> {
    let mut art = artifacts(run);
    let mut seen = Vec::new();
    let result = verify::verify(&run.spec, &mut |c| {
        print_check(c);
        seen.push(c.clone());
    });
    art.csv("verify.csv", &CHECK_HEADER, check_rows(&seen))?;
    result?;
    match seen.iter().filter(|c| !c.pass).count() {
        0 => Ok(()),
        n => Err(Failure::Checks(n)),
    }
}
