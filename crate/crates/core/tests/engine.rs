mod common;

use std::f64::consts::LN_2;

use proptest::prelude::*;
use szilard_core::engine::{
    cycle_work, work_terms, work_from_probabilities, n23_curve, optimize_branch, optimize_protocol, shannon_information,
    step_decomposition, write_work_csv, Mode, OptimizerGrids, Protocol, Setting, WorkReport,
};
use szilard_core::statmech::ThermalContext;
use szilard_core::units::{delta_eps, EPS1};
use szilard_core::Coupling;

fn g(x: f64) -> Coupling {
    Coupling::Finite(x)
}

fn second_law(r: &WorkReport) {
    let kt = r.kt;
    let n1 = (r.n_particles() + 1) as f64;
    assert!(r.work <= kt * r.information + 1e-12, "W = {} > kT I = {}", r.work, kt * r.information);
    assert!(r.work <= kt * n1.ln() + 1e-12, "W = {} > kT ln(N+1)", r.work);
}

fn decomposes(r: &WorkReport) {
    let tol = 1e-10 * r.work.abs().max(r.kt);
    assert!((r.steps.total() - r.work).abs() <= tol, "steps {} vs W {}", r.steps.total(), r.work);
}

/// Stage works for N = 2, g_ins = 0, branches (−5, 5, −5) at L/2, kT = ε₁,
/// from the two-body oracles.
const FROZEN_STEPS: [f64; 5] =
    [-2.4440399001780587e1, 0.0, 1.2037403150468110e1, 2.0813861041566266e1, -5.5501775609022967];
const FROZEN_W: f64 = 2.8606876293515038;
const FROZEN_P_REM: [f64; 3] = [4.9364189730524438e-1, 8.6514360661105760e-1, 4.9364189730524438e-1];

#[test]
fn frozen_steps_match_oracle() {
    let kt = EPS1;
    let (zi, zl_ins) = common::two_boson_chamber(0.0, kt);
    let total = |z: &[f64; 3]| {
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
    };
    let p: Vec<f64> = zi.iter().map(|z| (z - total(&zi)).exp()).collect();
    assert!((kt * (total(&zi) - zl_ins) - FROZEN_STEPS[0]).abs() < 1e-12);
    let mut tune = 0.0;
    for (n, gr) in [-5.0, 5.0, -5.0].into_iter().enumerate() {
        let (zr, _) = common::two_boson_chamber(gr, kt);
        assert!(((zr[n] - total(&zr)).exp() - FROZEN_P_REM[n]).abs() < 1e-14);
        tune += kt * p[n] * (zr[n] - zi[n]);
    }
    assert!((tune - FROZEN_STEPS[2]).abs() < 1e-12);
}

#[test]
fn two_boson_decomposition_matches_oracle() {
    let ctx = ThermalContext::default();
    let ins = Setting::new(0.5, g(0.0));
    let branches = [-5.0, 5.0, -5.0].map(|x| Setting::new(0.5, g(x))).to_vec();
    let protocol = Protocol::new(2, Mode::Driven, ins, branches).unwrap();
    let r = cycle_work(&ctx, &protocol, EPS1).unwrap();
    for (a, b) in r.steps.as_array().iter().zip(FROZEN_STEPS) {
        assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "{a} vs {b}");
    }
    for (a, b) in r.p_rem.iter().zip(FROZEN_P_REM) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    assert!((r.work - FROZEN_W).abs() < 1e-8);
    decomposes(&r);
    second_law(&r);
    assert_eq!(step_decomposition(&ctx, &protocol, EPS1).unwrap(), r.steps);
}

#[test]
fn identity_protocol_does_no_work() {
    let ctx = ThermalContext::default();
    for (n, ell, c, kt) in [(2, 0.5, g(1.0), EPS1), (3, 0.3, g(-0.4), 2.0 * EPS1), (1, 0.7, Coupling::Tonks, 0.5)] {
        let mode = if ell == 0.5 { Mode::Driven } else { Mode::Assisted };
        let p = Protocol::identity(n, mode, Setting::new(ell, c)).unwrap();
        let r = cycle_work(&ctx, &p, kt).unwrap();
        assert_eq!(r.work, 0.0);
        assert_eq!(r.steps.shift, 0.0);
        assert_eq!(r.steps.tune, 0.0);
        assert_eq!(r.steps.reset, 0.0);
        assert!((r.steps.removal + r.steps.insertion).abs() < 1e-12 * r.steps.insertion.abs());
        assert_eq!(r.p_rem, r.p_ins);
        second_law(&r);
    }
}

#[test]
fn single_particle_driven_stages() {
    let ctx = ThermalContext::default();
    let ins = Setting::new(0.5, g(2.0));
    let p = Protocol::new(1, Mode::Driven, ins, vec![ins, Setting::new(0.5, g(-3.0))]).unwrap();
    for kt in [1e-2, 1.0, 10.0] {
        let r = cycle_work(&ctx, &p, kt).unwrap();
        // one particle never interacts; removal at L/2 recovers nothing
        assert!(r.steps.tune.abs() < 1e-14 && r.steps.reset.abs() < 1e-14);
        assert!(r.work.abs() < 1e-14);
        decomposes(&r);
    }
}

#[test]
fn single_particle_szilard_limit() {
    let ctx = ThermalContext::default();
    let kt = 1e-3 * EPS1;
    let o = optimize_protocol(&ctx, 1, kt, Mode::Assisted, g(0.0), &OptimizerGrids::default_for(Mode::Assisted)).unwrap();
    assert!((o.report.ratio_ln2 - 1.0).abs() < 0.01, "{}", o.report.ratio_ln2);
    second_law(&o.report);
    decomposes(&o.report);
    let d = optimize_protocol(&ctx, 1, kt, Mode::Driven, g(0.0), &OptimizerGrids::default_for(Mode::Driven)).unwrap();
    assert!(d.report.work.abs() < 1e-15);
}

#[test]
fn reversible_removal_reaches_information() {
    let ctx = ThermalContext::default();
    let kt = 1e-3 * EPS1;
    let ins = Setting::new(0.5, g(0.0));
    let p = Protocol::new(1, Mode::Assisted, ins, vec![Setting::new(0.02, g(0.0)), Setting::new(0.98, g(0.0))]).unwrap();
    let r = cycle_work(&ctx, &p, kt).unwrap();
    assert!(r.p_rem.iter().all(|&x| x > 1.0 - 1e-12));
    assert!((r.work - kt * r.information).abs() < 1e-12 * kt);
    assert!((r.work - kt * LN_2).abs() < 0.01 * kt * LN_2);
}

#[test]
fn separable_over_outcomes() {
    let ctx = ThermalContext::default();
    let kt = EPS1;
    let ins = Setting::new(0.5, g(0.3));
    let base = Protocol::new(2, Mode::Assisted, ins, vec![Setting::new(0.4, g(1.0)), ins, Setting::new(0.6, g(-0.5))]).unwrap();
    let r0 = cycle_work(&ctx, &base, kt).unwrap();
    let r1 = cycle_work(&ctx, &base.with_branch(1, Setting::new(0.45, Coupling::Tonks)).unwrap(), kt).unwrap();
    let t0 = work_terms(&r0.p_ins, &r0.p_rem, kt).unwrap();
    let t1 = work_terms(&r1.p_ins, &r1.p_rem, kt).unwrap();
    assert_eq!(t0[0], t1[0]);
    assert_eq!(t0[2], t1[2]);
    assert_ne!(t0[1], t1[1]);
    second_law(&r0);
    second_law(&r1);
}

#[test]
fn reversibility_intervals() {
    let ctx = ThermalContext::default();
    for n_total in 1..=4usize {
        let kt = 1e-3 * delta_eps(n_total);
        let w = 1.0 / (n_total + 1) as f64;
        for n in 0..=n_total {
            let (lo, hi) = (n as f64 * w, (n + 1) as f64 * w);
            for f in [0.25, 0.5, 0.75] {
                let ell = lo + f * (hi - lo);
                let p = ctx.probabilities(n_total, ell, Coupling::Tonks, kt).unwrap().p[n];
                assert!(p >= 0.999, "N={n_total} n={n} l={ell}: {p}");
            }
            for ell in [0.5 * (lo + hi) - w, 0.5 * (lo + hi) + w] {
                if ell > 0.0 && ell < 1.0 {
                    let p = ctx.probabilities(n_total, ell, Coupling::Tonks, kt).unwrap().p[n];
                    assert!(p <= 0.6, "N={n_total} n={n} l={ell}: {p}");
                }
            }
        }
    }
}

#[test]
fn n23_curve_matches_limit_branches() {
    let ctx = ThermalContext::default();
    for (n_total, c, kt) in [(2, g(0.0), 3.0 * EPS1), (3, g(-0.5), 2.0 * EPS1), (2, g(1.5), 0.7 * EPS1), (3, g(0.0), 20.0)] {
        let t = ctx.probabilities(n_total, 0.5, c, kt).unwrap();
        let p_rem: Vec<f64> = (0..=n_total)
            .map(|n| if n == 0 || n == n_total { 0.5 } else if n_total == 2 { 1.0 } else { 0.5 })
            .collect();
        let w = work_from_probabilities(&t.p, &p_rem, kt).unwrap();
        let curve = n23_curve(t.p[0], kt).unwrap();
        assert!((w - curve).abs() < 1e-6 * kt, "{w} vs {curve}");
    }
}

#[test]
fn n23_curve_matches_optimized_driven_engine() {
    let ctx = ThermalContext::default();
    let kt = 0.05 * EPS1;
    let o = optimize_protocol(&ctx, 3, kt, Mode::Driven, g(-1.0), &OptimizerGrids::default_for(Mode::Driven)).unwrap();
    let curve = n23_curve(o.report.p_ins[0], kt).unwrap();
    assert!((o.report.work - curve).abs() < 1e-6 * kt, "{} vs {curve}", o.report.work);
    assert!(o.branches[0].extrapolated);
    second_law(&o.report);
    decomposes(&o.report);
}

#[test]
fn driven_branch_optima() {
    let ctx = ThermalContext::default();
    let grids = OptimizerGrids::default_for(Mode::Driven);
    let kt = 1e-2 * EPS1;
    let mid = optimize_branch(&ctx, 1, 2, kt, Mode::Driven, &grids).unwrap();
    assert_eq!(mid.setting.coupling, Coupling::Tonks);
    assert!(mid.p > 1.0 - 1e-9);
    let edge = optimize_branch(&ctx, 0, 2, kt, Mode::Driven, &grids).unwrap();
    assert!(edge.setting.coupling.as_f64() < 0.0 && edge.extrapolated);
    assert!((edge.p - 0.5).abs() < 1e-6, "{}", edge.p);
    let bad = OptimizerGrids { positions: vec![0.4], ..grids };
    assert!(optimize_branch(&ctx, 0, 2, kt, Mode::Driven, &bad).is_err());
}

#[test]
fn assisted_tie_resolves_to_interval_midpoint() {
    let ctx = ThermalContext::default();
    let grids = OptimizerGrids { couplings: vec![Coupling::Tonks], ..OptimizerGrids::default_for(Mode::Assisted) };
    let b = optimize_branch(&ctx, 1, 3, 1e-3 * delta_eps(3), Mode::Assisted, &grids).unwrap();
    assert!(b.setting.ell > 0.25 && b.setting.ell < 0.5);
    assert!((b.setting.ell - 0.375).abs() < 0.011, "{}", b.setting.ell);
    assert!(b.p >= 0.999);
}

#[test]
fn optimized_protocols() {
    let ctx = ThermalContext::default();
    let o = optimize_protocol(&ctx, 3, 0.01 * delta_eps(3), Mode::Assisted, g(0.0), &OptimizerGrids::default_for(Mode::Assisted))
        .unwrap();
    assert!(o.report.ratio_ln_outcomes >= 0.99);
    second_law(&o.report);
    decomposes(&o.report);
    let d = optimize_protocol(&ctx, 2, 1e-2 * EPS1, Mode::Driven, g(0.0), &OptimizerGrids::default_for(Mode::Driven)).unwrap();
    assert!(d.report.ratio_ln2 < 1.0);
    second_law(&d.report);
}

#[test]
fn driven_information_ceiling() {
    let ctx = ThermalContext::default();
    for n_total in 1..=4usize {
        let ln = ((n_total + 1) as f64).ln();
        let t = ctx.probabilities(n_total, 0.5, g(0.0), 1e-3 * EPS1).unwrap();
        let i = shannon_information(&t.p).unwrap();
        assert!((i - ln).abs() < 1e-6);
        for (c, kt) in [(g(-0.5), 0.3), (g(2.0), 5.0), (Coupling::Tonks, 1.0)] {
            let t = ctx.probabilities(n_total, 0.5, c, kt).unwrap();
            assert!(shannon_information(&t.p).unwrap() <= ln + 1e-12);
        }
    }
}

#[test]
fn work_csv() {
    let ctx = ThermalContext::default();
    let p = Protocol::identity(1, Mode::Driven, Setting::new(0.5, g(0.0))).unwrap();
    let r = cycle_work(&ctx, &p, EPS1).unwrap();
    let mut buf = Vec::new();
    write_work_csv(&mut buf, &[r]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,kT,mode,g_ins,W,I,W_over_ln2,W_over_lnNp1,p_rem_0,p_rem_1,step_i,step_ii1,step_ii2,step_iii,step_iv,kT_over_dN,trunc_bound"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 17);
    assert_eq!(&row[..5], ["1", "1", "driven", "0", "0"]);
}

fn coupling_strategy() -> impl Strategy<Value = Coupling> {
    prop_oneof![(-1.0f64..10.0).prop_map(Coupling::Finite), Just(Coupling::Tonks)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn decomposition_identity(
        n_total in 1usize..=3,
        settings in proptest::collection::vec((0.1f64..0.9, coupling_strategy()), 5),
        kt in 0.2f64..3.0,
    ) {
        let ctx = ThermalContext::default();
        let ins = Setting::new(settings[0].0, settings[0].1);
        let branches = settings[1..=n_total + 1].iter().map(|&(l, c)| Setting::new(l, c)).collect();
        let p = Protocol::new(n_total, Mode::Assisted, ins, branches).unwrap();
        let r = cycle_work(&ctx, &p, kt * EPS1).unwrap();
        decomposes(&r);
        second_law(&r);
    }
}
