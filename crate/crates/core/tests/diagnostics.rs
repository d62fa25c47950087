mod common;

use std::sync::{Arc, OnceLock};

use proptest::prelude::*;

use common::{domain, load};
use junction_flow::carrier::{build_carrier, CarrierMode};
use junction_flow::diagnostics::{
    asymptotics_report, bernoulli_and_euler_identity, energy_identity_residual, random_solenoidal,
    uniqueness_experiment, uniqueness_sweep, CenterField,
};
use junction_flow::error::Error;
use junction_flow::field::FaceForce;
use junction_flow::geometry::validate_domain;
use junction_flow::grid::{FaceKind, MacGrid};
use junction_flow::invading::energy_up_to;
use junction_flow::solver::{dirichlet_norm, solve_steady_ns, CarrierSample, SolveResult, SolverOptions};

struct Solved {
    grid: MacGrid,
    sample: CarrierSample,
    force: FaceForce,
    result: SolveResult,
}

/// Forced bridge solve at `t = 5`, shared by the property tests.
fn forced_bridge() -> &'static Solved {
    static CELL: OnceLock<Solved> = OnceLock::new();
    CELL.get_or_init(|| {
        let c = build_carrier(&domain("bridge"), 0.0625, 0.5, CarrierMode::Hopf).unwrap();
        let (_, grid, sample) = c.sample_truncation(5.0).unwrap();
        let force = FaceForce::uniform(&grid, [0.2, 0.1], Some([-1.0, -1.0, 1.0, 2.0]));
        let result = solve_steady_ns(&grid, &sample, &force, &SolverOptions::default(), None).unwrap();
        Solved { grid, sample, force, result }
    })
}

#[test]
fn energy_balance_closes_on_every_section() {
    let s = forced_bridge();
    for t in [1.0, 2.5, 4.0] {
        let e = energy_identity_residual(&s.grid, &s.sample, &s.result, &s.force, t);
        assert!(e.residual <= 1e-8, "t {t}: {e:?}");
        let d = energy_up_to(&s.grid, &s.result.w, t);
        assert!((e.dirichlet - d).abs() <= 1e-12 * d, "{} vs {d}", e.dirichlet);
    }
    // On the whole truncation the section terms vanish with w.
    let e = energy_identity_residual(&s.grid, &s.sample, &s.result, &s.force, 5.0);
    assert!((e.dirichlet - s.result.j * s.result.j).abs() <= 1e-12 * e.dirichlet);
}

#[test]
fn resting_fluid_has_bernoulli_equal_to_pressure() {
    let f = CenterField::sample(10, 7, 0.2, 0.0, 0.0, |z| ([0.0, 0.0], z[0] * z[1] - 3.0));
    let b = bernoulli_and_euler_identity(&f);
    assert_eq!(b.phi, f.q);
    assert!(b.omega.iter().filter(|x| x.is_finite()).all(|&w| w == 0.0));
}

#[test]
fn rigid_rotation_has_vorticity_two() {
    // v = (−y, x): the centred node differences are exact on linear fields.
    let f = CenterField::sample(12, 12, 1.0 / 6.0, -1.0, -1.0, |z| ([-z[1], z[0]], 0.0));
    let b = bernoulli_and_euler_identity(&f);
    let inner: Vec<f64> = b.omega.iter().copied().filter(|x| x.is_finite()).collect();
    assert_eq!(inner.len(), 11 * 11);
    assert!(inner.iter().all(|w| (w - 2.0).abs() <= 1e-12));
}

#[test]
fn centre_interpolation_of_a_mac_field() {
    let s = forced_bridge();
    let c = CenterField::from_mac(&s.grid, &s.result.u);
    for k in 0..s.grid.n_cells() {
        assert_eq!(s.grid.cells[k].is_fluid(), c.vx[k].is_finite());
    }
    assert_eq!(c.q[s.grid.p_of[0]], s.result.u.p[s.grid.p_of[0]]);
}

#[test]
fn poiseuille_has_no_asymptotic_deviation() {
    let spec = load("channel");
    let c = build_carrier(&domain("channel"), spec.delta, 0.5, CarrierMode::Cp).unwrap();
    let (tr, g, s) = c.sample_truncation(12.0).unwrap();
    let r = solve_steady_ns(&g, &s, &FaceForce::zero(&g), &spec.solver, None).unwrap();
    let rep = asymptotics_report(&tr, &g, &r.u, 1e-3).unwrap();
    assert!(rep.passed());
    assert_eq!(rep.outlets.len(), 2);
    for o in &rep.outlets {
        assert!(o.deviation.iter().all(|&d| d <= 1e-12), "{:?}", o.deviation);
        assert!(o.slab_seminorm.iter().all(|&(_, n)| n <= 1e-12));
        assert!((o.max_cp - 1.5).abs() <= 0.01, "{}", o.max_cp);
    }
    assert_eq!(rep.tail, [4.0, 10.0]);

    let (short, g, s) = c.sample_truncation(11.0).unwrap();
    let r = solve_steady_ns(&g, &s, &FaceForce::zero(&g), &spec.solver, None).unwrap();
    assert!(matches!(asymptotics_report(&short, &g, &r.u, 1e-3), Err(Error::TruncationTooShort(t)) if t == 11.0));
}

#[test]
fn straight_channel_solutions_agree_exactly() {
    let spec = load("channel");
    let c = build_carrier(&domain("channel"), spec.delta, 0.5, CarrierMode::Cp).unwrap();
    let (_, g, s) = c.sample_truncation(2.0).unwrap();
    let out = uniqueness_experiment(&g, &s, &FaceForce::zero(&g), &spec.solver, 0.1, 3).unwrap();
    assert!(out.discrepancy <= 1e-12, "{out:?}");
    assert!(out.j_a <= 1e-12 && out.j_b <= 1e-12);
}

#[test]
fn relabelling_outlets_changes_nothing() {
    let spec = load("bridge");
    let run = |d: Arc<junction_flow::geometry::ValidatedDomain>| {
        let c = build_carrier(&d, spec.delta, 0.5, CarrierMode::Hopf).unwrap();
        let (_, g, s) = c.sample_truncation(3.0).unwrap();
        uniqueness_experiment(&g, &s, &FaceForce::zero(&g), &spec.solver, 0.05, 9).unwrap()
    };
    let mut swapped = spec.domain.clone();
    swapped.outlets.swap(0, 1);
    let a = run(domain("bridge"));
    let b = run(Arc::new(validate_domain(swapped).unwrap()));
    assert!((a.j_a - b.j_a).abs() <= 1e-10 * a.j_a, "{a:?} {b:?}");
    assert!(a.discrepancy <= 1e-8 && b.discrepancy <= 1e-8);
}

#[test]
fn sweep_reports_every_amplitude() {
    let c = build_carrier(&domain("bridge"), 0.0625, 0.5, CarrierMode::Cp).unwrap();
    let amps = [0.01, 0.05, 0.2];
    let sw = uniqueness_sweep(&c, 3.0, &amps, &SolverOptions::default(), 0.05, 1, 1e-6).unwrap();
    assert_eq!(sw.rows.iter().map(|r| r.amplitude).collect::<Vec<_>>(), amps);
    for r in &sw.rows {
        assert!(r.error.is_none(), "{r:?}");
        assert!(r.discrepancy.unwrap() <= 1e-6);
    }
    assert_eq!(sw.first_split, None);
    // A tolerance of -1 makes the first amplitude a split.
    let sw = uniqueness_sweep(&c, 3.0, &amps[..1], &SolverOptions::default(), 0.05, 1, -1.0).unwrap();
    assert_eq!(sw.first_split, Some(0.01));

    let mut quiet = load("channel").domain;
    quiet.outlets.iter_mut().for_each(|o| o.flux = 0.0);
    let qc = build_carrier(&Arc::new(validate_domain(quiet).unwrap()), 0.125, 0.5, CarrierMode::Cp).unwrap();
    assert!(matches!(
        uniqueness_sweep(&qc, 2.0, &[1.0], &SolverOptions::default(), 0.05, 1, 1e-6),
        Err(Error::Precondition(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pressure_gauge_does_not_move_the_balance(shift in -1e3f64..1e3, t in 1u32..5) {
        let s = forced_bridge();
        let t = t as f64;
        let e0 = energy_identity_residual(&s.grid, &s.sample, &s.result, &s.force, t);
        let mut r = s.result.clone();
        r.u.p.iter_mut().for_each(|p| *p += shift);
        r.w.p.iter_mut().for_each(|p| *p += shift);
        let e1 = energy_identity_residual(&s.grid, &s.sample, &r, &s.force, t);
        let scale = e0.dirichlet.max(1e-300);
        prop_assert!((e0.pressure_flux - e1.pressure_flux).abs() <= 1e-12 * (1.0 + shift.abs()) * scale.max(1.0));
        prop_assert!((e0.residual - e1.residual).abs() <= 1e-10);
    }

    #[test]
    fn random_solenoidal_fields(size in 1e-3f64..10.0, seed in any::<u64>()) {
        let g = &forced_bridge().grid;
        let w = random_solenoidal(g, size, seed);
        prop_assert!(w.max_divergence(g) <= 1e-12 * size / g.delta);
        prop_assert!((dirichlet_norm(g, &w, &|_| true) - size).abs() <= 1e-12 * size);
        for p in 0..g.n_u_faces() {
            if g.u_kind[p] != FaceKind::Interior { prop_assert_eq!(w.u[p], 0.0); }
        }
        for p in 0..g.n_v_faces() {
            if g.v_kind[p] != FaceKind::Interior { prop_assert_eq!(w.v[p], 0.0); }
        }
        prop_assert_eq!(&random_solenoidal(g, size, seed), &w);
        prop_assert_ne!(&random_solenoidal(g, size, seed.wrapping_add(1)), &w);
    }
}
