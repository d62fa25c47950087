mod common;

use std::sync::OnceLock;

use proptest::prelude::*;

use common::{domain, load};
use junction_flow::carrier::{build_carrier, CarrierMode};
use junction_flow::error::Error;
use junction_flow::field::{BoundaryData, FaceForce, StaggeredField};
use junction_flow::grid::MacGrid;
use junction_flow::invading::{
    classify, comparison_check, energy_up_to, extend_field, growth_profile, normalized_view, parse_schedule,
    run_invading, Case, Schedule,
};
use junction_flow::ops::dirichlet_energy;
use junction_flow::solver::{solve_steady_ns, SolverOptions};

/// One solved bridge truncation, shared by the property tests.
fn solved_bridge() -> &'static (MacGrid, StaggeredField, f64) {
    static CELL: OnceLock<(MacGrid, StaggeredField, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let c = build_carrier(&domain("bridge"), 0.0625, 0.5, CarrierMode::Hopf).unwrap();
        let (_, g, s) = c.sample_truncation(5.0).unwrap();
        let r = solve_steady_ns(&g, &s, &FaceForce::zero(&g), &SolverOptions::default(), None).unwrap();
        (g, r.w, r.j)
    })
}

fn bridge_run(formula: &str, mode: CarrierMode) -> junction_flow::invading::InvadingRun {
    let spec = load("bridge");
    let c = build_carrier(&domain("bridge"), spec.delta, 0.5, mode).unwrap();
    let sched = Schedule::from_formula(formula, spec.delta, mode).unwrap();
    run_invading(&c, &sched, &|g| FaceForce::zero(g), &spec.solver).unwrap()
}

#[test]
fn schedule_errors() {
    for bad in ["", "2+4k,K=x", "2+4k,N=3", "a,b", "2*k,K=3"] {
        assert!(parse_schedule(bad).is_err(), "{bad}");
    }
    assert!(Schedule::new(vec![], 0.5, CarrierMode::Cp).is_err());
    assert!(Schedule::new(vec![0.0, 1.0], 0.5, CarrierMode::Cp).is_err());
    assert!(Schedule::new(vec![3.0, 2.0], 0.5, CarrierMode::Cp).is_err());
    assert!(Schedule::new(vec![1.0], -0.5, CarrierMode::Cp).is_err());
    assert_eq!(Schedule::new(vec![1.0, 1.5], 0.25, CarrierMode::Hopf).unwrap().times, vec![1.0, 1.5]);
}

#[test]
fn growth_rule_examples() {
    // Three consecutive ratios above 1.05.
    assert_eq!(classify(&[1.0, 1.06, 1.13, 1.2]), Case::Unbounded);
    assert_eq!(classify(&[1.0, 1.04, 1.08, 1.12, 1.16]), Case::Bounded);
    assert_eq!(classify(&[1.0, 2.0, 4.0, 4.0, 8.0, 16.0]), Case::Bounded);
    assert_eq!(classify(&[1.0]), Case::Bounded);
    assert_eq!(classify(&[]), Case::Bounded);
    assert_eq!(Case::Bounded.label(), "I");
    assert_eq!(Case::Unbounded.label(), "II");
}

#[test]
fn zero_field_has_zero_profile() {
    let g = &solved_bridge().0;
    let z = StaggeredField::zeros(g);
    let gp = growth_profile(g, &z, &[0.0, 1.0, 2.0, 3.0, 4.0], 1.0);
    assert!(gp.d.iter().all(|&d| d == 0.0));
    assert_eq!(gp.c0, 0.0);
    assert_eq!(gp.c1, 0.0);
    assert!(gp.e[0].is_nan() && gp.e[1..].iter().all(|&e| e == 0.0));
}

#[test]
fn poiseuille_energy_grows_linearly() {
    // A unit channel carrying F = 1 has ∫(u')² = 12 per unit length; with a
    // core of length 2 and two outlets, D(t) = 12 (2 + 2t). A face belongs to
    // Ω^t when both of its cells do, so the discrete region is one column
    // short and D(t) = 12 (2 + 2t − Δ).
    let spec = load("channel");
    let c = build_carrier(&domain("channel"), spec.delta, 0.5, CarrierMode::Cp).unwrap();
    let (_, g, s) = c.sample_truncation(6.0).unwrap();
    // Stay one unit clear of the caps, where the zero boundary data do not
    // match the inflow profile.
    let tg: Vec<f64> = (0..=5).map(|x| x as f64).collect();
    let gp = growth_profile(&g, &s.field, &tg, 0.0);
    for (t, d) in gp.t.iter().zip(&gp.d) {
        let want = 12.0 * (2.0 + 2.0 * t - g.delta);
        assert!((d - want).abs() <= 1e-10 * want, "t {t}: {d} vs {want}");
    }
    assert!((gp.c0 - 24.0).abs() <= 1e-10, "{}", gp.c0);
    assert!(gp.e[1..].iter().all(|e| (e - 24.0).abs() <= 1e-10));
    // The unit-window average of a line is its midpoint value.
    assert!((gp.h[3] - 12.0 * (2.0 + 5.0 - g.delta)).abs() <= 1e-10, "{}", gp.h[3]);
}

#[test]
fn straight_channel_is_case_one_with_zero_correction() {
    let spec = load("channel");
    let c = build_carrier(&domain("channel"), spec.delta, 0.5, CarrierMode::Cp).unwrap();
    let sched = spec.schedule().unwrap();
    let run = run_invading(&c, &sched, &|g| FaceForce::zero(g), &spec.solver).unwrap();
    assert!(run.failure.is_none());
    assert_eq!(run.steps.len(), 4);
    assert!(run.j().iter().all(|&j| j <= 1e-12), "{:?}", run.j());
    assert_eq!(run.case, Case::Bounded);
    assert!(matches!(
        normalized_view(&run.steps.iter().map(|s| (&s.grid, &s.result.w)).collect::<Vec<_>>(), 1.0),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn small_data_bridge_converges() {
    let run = bridge_run("2+2k,K=4", CarrierMode::Cp);
    assert!(run.failure.is_none(), "{:?}", run.failure);
    let j = run.j();
    assert_eq!(run.case, Case::Bounded);
    assert!(j[0] > 0.0);
    for w in j[1..].windows(2) {
        assert!((w[1] - w[0]).abs() <= 0.01 * w[1], "{j:?}");
    }
    // Nested solutions agree on a fixed window; the carrier is exact in the
    // outlets, so they do so to rounding.
    let window = 1.0;
    let mut gaps = Vec::new();
    for p in run.steps.windows(2) {
        let (a, b) = (&p[0], &p[1]);
        let ext = extend_field(&a.grid, &a.result.w, &b.grid);
        let diff = ext.sub(&b.result.w);
        let zero = BoundaryData::zeros(&b.grid);
        gaps.push(dirichlet_energy(&b.grid, &diff.u, &diff.v, &zero, &|c| b.grid.cell_in_truncation(c, window)).sqrt());
    }
    assert!(gaps.iter().all(|&d| d <= 1e-10 * j[0]), "{gaps:?} {j:?}");
}

#[test]
fn mismatched_schedule_is_refused() {
    let c = build_carrier(&domain("bridge"), 0.0625, 0.5, CarrierMode::Cp).unwrap();
    let opts = SolverOptions::default();
    let zero = |g: &MacGrid| FaceForce::zero(g);
    let other_mode = Schedule::new(vec![2.0], 0.0625, CarrierMode::Hopf).unwrap();
    assert!(matches!(run_invading(&c, &other_mode, &zero, &opts), Err(Error::Precondition(_))));
    let other_delta = Schedule::new(vec![2.0], 0.125, CarrierMode::Cp).unwrap();
    assert!(matches!(run_invading(&c, &other_delta, &zero, &opts), Err(Error::GridMismatch(_))));
}

#[test]
fn extension_keeps_values_and_zero_fills() {
    let (g, w, _) = solved_bridge();
    let c = build_carrier(&domain("bridge"), 0.0625, 0.5, CarrierMode::Hopf).unwrap();
    let (_, big, _) = c.sample_truncation(7.0).unwrap();
    let ext = extend_field(g, w, &big);
    let zero = |g: &MacGrid| BoundaryData::zeros(g);
    let e0 = dirichlet_energy(g, &w.u, &w.v, &zero(g), &|_| true);
    let e1 = dirichlet_energy(&big, &ext.u, &ext.v, &zero(&big), &|_| true);
    // Away from the old caps nothing changes. At the caps the old wall ghost
    // doubles the last tangential gradient, the zero extension does not.
    let (a, b) = (energy_up_to(g, w, 4.0), energy_up_to(&big, &ext, 4.0));
    assert!((a - b).abs() <= 1e-12 * a, "{a} vs {b}");
    assert!(e1 <= e0 && e1 >= a, "{e0} {e1} {a}");
    for &p in &big.u_of {
        if let Some(f) = g.face_at(big.u_center(p)) {
            let old = w.face(f);
            assert_eq!(ext.u[p], if g.face_kind(f) == junction_flow::grid::FaceKind::Interior { old } else { 0.0 });
        } else {
            assert_eq!(ext.u[p], 0.0);
        }
    }
}

#[test]
fn growing_multiples_have_a_constant_window() {
    let (g, w, j) = solved_bridge();
    let ws: Vec<StaggeredField> = (1..=5).map(|k| w.scale(k as f64)).collect();
    let steps: Vec<(&MacGrid, &StaggeredField)> = ws.iter().map(|x| (g, x)).collect();
    let out = normalized_view(&steps, 2.0).unwrap();
    for (k, s) in out.iter().enumerate() {
        assert!((s.j - (k + 1) as f64 * j).abs() <= 1e-12 * s.j);
        assert!((s.unit_norm - 1.0).abs() <= 1e-12);
        assert!((s.window_l2 - out[0].window_l2).abs() <= 1e-12 * out[0].window_l2);
        assert!((s.window_dirichlet - out[0].window_dirichlet).abs() <= 1e-12);
    }
    assert!(out[0].window_dirichlet > 0.0 && out[0].window_dirichlet < 1.0);
}

#[test]
fn vanishing_first_step_cannot_be_normalized() {
    let (g, w, _) = solved_bridge();
    // J_0 = 0 breaks nothing in the growth rule but cannot be normalized.
    let ws = [StaggeredField::zeros(g), w.scale(1.0), w.scale(1.1), w.scale(1.21), w.scale(1.331)];
    let steps: Vec<(&MacGrid, &StaggeredField)> = ws.iter().map(|x| (g, x)).collect();
    assert!(matches!(normalized_view(&steps, 1.0), Err(Error::DegenerateNormalization(_))));
}

#[test]
fn comparison_examples() {
    let (t0, t1, n) = (0.0, 2.0, 33);
    let s = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
        (0..n).map(|k| f(t0 + (t1 - t0) * k as f64 / (n - 1) as f64)).collect()
    };
    let psi = |x: f64| 0.5 * x * x;
    // φ = 4 has φ' = 0, so 2Ψ(φ') = 0 ≤ φ; h = 1 ≤ Ψ(0) + 2.
    let ok = comparison_check(&s(&|_| 1.0), &s(&|_| 4.0), &psi, t0, t1).unwrap();
    assert!(ok.hypotheses_hold && ok.conclusion_holds, "{:?}", ok.failures);
    // h = 3 breaks h ≤ Ψ(h') + φ/2 = 2.
    let bad = comparison_check(&s(&|_| 3.0), &s(&|_| 4.0), &psi, t0, t1).unwrap();
    assert!(!bad.hypotheses_hold && bad.conclusion_holds);
    assert!(bad.failures.iter().all(|f| f.contains("h <= Psi")));
    // h above φ at the right end.
    let end = comparison_check(&s(&|t| 1.0 + 2.0 * t), &s(&|_| 4.0), &|x: f64| 4.0 * x, t0, t1).unwrap();
    assert!(!end.conclusion_holds);
    assert!(end.failures.iter().any(|f| f.contains("h(T)")));

    assert!(matches!(comparison_check(&[1.0; 8], &[2.0; 8], &psi, t0, t1), Err(Error::GridTooCoarse(8))));
    assert!(matches!(comparison_check(&[1.0; 20], &[2.0; 19], &psi, t0, t1), Err(Error::GridTooCoarse(19))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schedule_formula_round_trip(a in 1u32..20, b in 1u32..8, n in 0usize..12, q in prop::sample::select(vec![1.0, 0.5, 0.25])) {
        let (a, b) = (a as f64 * q, b as f64 * q);
        let t = parse_schedule(&format!("{a}+{b}k,K={n}")).unwrap();
        prop_assert_eq!(t.len(), n + 1);
        for (k, x) in t.iter().enumerate() {
            prop_assert_eq!(*x, a + b * k as f64);
        }
        let list = t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        prop_assert_eq!(parse_schedule(&list).unwrap(), t.clone());
        prop_assert!(Schedule::new(t, 0.25, CarrierMode::Cp).is_ok());
    }

    #[test]
    fn energy_is_monotone_in_the_truncation(s in 0.0f64..5.0, d in 0.0f64..5.0) {
        let (g, w, j) = solved_bridge();
        let t = (s + d).min(5.0);
        prop_assert!(energy_up_to(g, w, s) <= energy_up_to(g, w, t) + 1e-15);
        let full = energy_up_to(g, w, 5.0);
        prop_assert!((full - j * j).abs() <= 1e-12 * j * j);
    }

    #[test]
    fn ratios_above_the_threshold_are_unbounded(start in 0.1f64..10.0, r in prop::collection::vec(1.051f64..3.0, 3..8)) {
        let mut j = vec![start];
        for x in &r { j.push(j.last().unwrap() * x); }
        prop_assert_eq!(classify(&j), Case::Unbounded);
        let flat: Vec<f64> = j.iter().enumerate().map(|(k, _)| start * 1.049f64.powi(k as i32)).collect();
        prop_assert_eq!(classify(&flat), Case::Bounded);
    }
}
