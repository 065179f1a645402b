use std::f64::consts::PI;

use dphase_core::verification::{
    check_i_decomposition, check_jensen_gradient, check_star_chain, gradient_blowup_rate, run_convergence, time_modulus,
    ConvergenceSetup, Status, Tolerances,
};
use dphase_core::{Cylinder, ExponentSet, GridField, MollifierKernel, Regime, SpatialProfile, Weight, WeightForm};
use proptest::prelude::*;

fn qtilde() -> Cylinder {
    Cylinder::centered(1, 1.0, 0.0, 1.0).unwrap()
}

fn q() -> Cylinder {
    Cylinder::centered(1, 0.5, 0.25, 0.75).unwrap()
}

fn field(f: fn(&[f64], f64) -> f64) -> GridField {
    GridField::from_fn(qtilde(), 81, 1601, f).unwrap()
}

fn sine(x: &[f64], t: f64) -> f64 {
    (PI * x[0]).sin() * (1.0 + t)
}

#[test]
fn modulus_examples() {
    let deltas = [0.0, 0.01, 0.05, 0.1];
    let still = field(|x, _| x[0] * x[0]);
    let m = time_modulus(&still, &q(), &deltas).unwrap();
    assert!(m.omega.iter().all(|w| *w == 0.0));
    // |B| = 1
    let ramp = field(|_, t| t);
    let m = time_modulus(&ramp, &q(), &deltas).unwrap();
    for (d, w) in deltas.iter().zip(&m.omega) {
        assert!((w - d).abs() < 1e-12, "{d}: {w}");
    }
    assert!(time_modulus(&ramp, &q(), &[0.3]).is_err());
    assert!(time_modulus(&ramp, &q(), &[-0.1]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn modulus_is_nondecreasing(mut deltas in prop::collection::vec(0.0f64..0.2, 1..8), k in 0.5f64..4.0) {
        deltas.sort_by(f64::total_cmp);
        let w = GridField::from_fn(qtilde(), 41, 201, move |x, t| (k * x[0] + 3.0 * t).sin()).unwrap();
        let m = time_modulus(&w, &q(), &deltas).unwrap();
        prop_assert!(m.omega.windows(2).all(|p| p[0] <= p[1]));
        let zero = time_modulus(&w, &q(), &[0.0]).unwrap();
        prop_assert_eq!(zero.omega[0], 0.0);
    }
}

#[test]
fn jensen_margins() {
    let k = MollifierKernel::new(1).unwrap();
    let affine = field(|x, t| 2.0 - 3.0 * x[0] + 0.5 * t);
    let j = check_jensen_gradient(&k, &affine, 2.0, 0.2, &q()).unwrap();
    assert!(j.min_margin.abs() <= 1e-12 && j.pass);
    let c = field(|_, _| 1.5);
    assert_eq!(check_jensen_gradient(&k, &c, 3.0, 0.2, &q()).unwrap().min_margin, 0.0);
    let s = field(|x, _| (PI * x[0]).sin());
    for h in [0.4, 0.2, 0.1] {
        let j = check_jensen_gradient(&k, &s, 2.0, h, &q()).unwrap();
        assert!(j.min_margin > 0.0, "h = {h}: {}", j.min_margin);
    }
}

#[test]
fn star_chain_with_constant_weight() {
    let k = MollifierKernel::new(1).unwrap();
    let w = field(sine);
    let e = ExponentSet::new(1, 2.0, 2.3, 0.5).unwrap();
    let weight = Weight::new(WeightForm::Constant(0.8), 0.5, 0.7).unwrap();
    let a = check_star_chain(&k, &w, &weight, &e, 0.2, &q(), Regime::General).unwrap();
    let b = check_star_chain(&k, &w, &weight, &e, 0.1, &q(), Regime::General).unwrap();
    assert_eq!(a.coef_margin, 0.7 * 0.2f64.powf(0.5));
    assert!((b.coef_margin / a.coef_margin - 2.0f64.powf(-0.5)).abs() < 1e-14);
    assert_eq!(a.identity_residual, 0.0);
    assert!(a.second_jensen_margin >= -a.eps_second);
    assert!(a.pass && b.pass);
}

#[test]
fn star_chain_with_ramp_weight() {
    let k = MollifierKernel::new(1).unwrap();
    let w = field(sine);
    let e = ExponentSet::new(1, 2.0, 2.5, 1.0).unwrap();
    let weight = Weight::ramp(2.0, 1.0, 0, -0.1).unwrap();
    for h in [0.4, 0.2, 0.1, 0.05] {
        let s = check_star_chain(&k, &w, &weight, &e, h, &q(), Regime::Bounded).unwrap();
        assert!(s.coef_margin >= -1e-14, "{}", s.coef_margin);
        assert!(s.star_margin >= -s.eps_star);
        assert!(s.identity_residual <= 1e-12);
        assert!(s.pass, "h = {h}");
        assert!(s.verdict.satisfied);
    }
    let over = ExponentSet::new(1, 2.0, 3.5, 1.0).unwrap();
    let s = check_star_chain(&k, &w, &weight, &over, 0.2, &q(), Regime::Bounded).unwrap();
    assert!(!s.verdict.satisfied);
}

#[test]
fn second_jensen_is_tight_for_affine_fields() {
    let k = MollifierKernel::new(1).unwrap();
    let w = field(|x, t| 1.0 + 0.5 * x[0] - t);
    let e = ExponentSet::new(1, 2.0, 2.5, 1.0).unwrap();
    let c = Weight::new(WeightForm::Constant(0.4), 1.0, 0.0).unwrap();
    let s = check_star_chain(&k, &w, &c, &e, 0.2, &q(), Regime::General).unwrap();
    assert!(s.second_jensen_margin.abs() < 1e-12);
    // with a varying weight only the averaging of a is left
    let ramp = Weight::ramp(1.0, 1.0, 0, -1.0).unwrap();
    let s = check_star_chain(&k, &w, &ramp, &e, 0.2, &q(), Regime::General).unwrap();
    assert!(s.second_jensen_margin >= 0.0);
    let slope = 0.5f64;
    let bound = 0.2 * (slope.powi(2) + slope.powf(2.5)) + 1e-12;
    assert!(s.second_jensen_margin <= bound, "{}", s.second_jensen_margin);
}

#[test]
fn decomposition_degenerate_fields() {
    let k = MollifierKernel::new(1).unwrap();
    let still = field(|x, _| (PI * x[0]).sin());
    let d = check_i_decomposition(&k, &still, 0.2, &q()).unwrap();
    assert!(d.i2.iter().all(|v| *v == 0.0));
    assert!(d.i1_sup > 0.0 && d.holds);
    assert!(d.gap_sup <= d.i1_sup + d.eps);
    let flat = field(|_, t| t * t);
    let d = check_i_decomposition(&k, &flat, 0.2, &q()).unwrap();
    assert!(d.i1.iter().all(|v| *v == 0.0));
    assert!(d.i2_sup <= d.omega_h2 + d.eps);
    assert!(d.holds);
}

#[test]
fn decomposition_bounds_the_gap() {
    let k = MollifierKernel::new(1).unwrap();
    let w = field(sine);
    for h in [0.4, 0.2, 0.1] {
        let d = check_i_decomposition(&k, &w, h, &q()).unwrap();
        for ((g, a), b) in d.gap.iter().zip(&d.i1).zip(&d.i2) {
            assert!(*g <= a + b + d.eps);
        }
        assert!(d.ftc_margin >= -d.eps);
        assert!(d.holds);
    }
}

#[test]
fn smooth_field_gradient_stays_bounded() {
    let k = MollifierKernel::new(1).unwrap();
    let w = field(sine);
    let e = ExponentSet::new(1, 2.0, 2.5, 1.0).unwrap();
    let fit = gradient_blowup_rate(&k, &w, Regime::General, &e, &[0.4, 0.2, 0.1, 0.05], &q()).unwrap();
    assert!(fit.slope.unwrap().abs() < 0.1 && fit.pass);
    assert!(gradient_blowup_rate(&k, &w, Regime::General, &e, &[0.4, 0.2], &q()).is_err());
    assert!(gradient_blowup_rate(&k, &w, Regime::General, &e, &[0.2, 0.4, 0.1], &q()).is_err());
}

fn setup(name: &str, f: fn(&[f64], f64) -> f64) -> ConvergenceSetup {
    ConvergenceSetup {
        name: name.into(),
        field: GridField::from_fn(qtilde(), 161, 1601, f).unwrap(),
        weight: Weight::ramp(1.0, 1.0, 0, 0.0).unwrap(),
        exps: ExponentSet::new(1, 2.0, 2.5, 1.0).unwrap(),
        regime: Regime::General,
        q: q(),
        h_values: vec![0.4, 0.2, 0.1, 0.05],
        tolerances: Tolerances::default(),
        profile: SpatialProfile::Radial,
    }
}

#[test]
fn constant_field_has_no_gaps() {
    let r = run_convergence(&setup("constant", |_, _| 2.0)).unwrap();
    for col in ["norm_gap_lpw1p", "norm_gap_cl2", "energy_gap_p", "energy_gap_f", "i1_sup", "i2_sup"] {
        assert!(r.column(col).unwrap().iter().all(|v| *v < 1e-13), "{col}");
    }
    assert_eq!(r.exit_code(), 0, "{:#?}", r.families);
}

#[test]
fn affine_field_energy_gaps_vanish() {
    let r = run_convergence(&setup("affine", |x, t| 0.5 + x[0] - 2.0 * t)).unwrap();
    for col in ["energy_gap_p", "energy_gap_f", "norm_gap_lpw1p"] {
        assert!(r.column(col).unwrap().iter().all(|v| *v < 1e-12), "{col}: {:?}", r.column(col));
    }
    assert!(r.column("jensen_margin").unwrap().iter().all(|v| v.abs() < 1e-12));
    assert_eq!(r.exit_code(), 0);
}

#[test]
fn smooth_field_converges_at_second_order() {
    let mut s = setup("sine", sine);
    s.tolerances.convergence_rel = 5e-3;
    let r = run_convergence(&s).unwrap();
    assert_eq!(r.exit_code(), 0, "{:#?}", r.families);
    let rate = r.fitted_rates.iter().find(|f| f.column == "energy_gap_p").unwrap();
    let slope = rate.slope.unwrap();
    assert!((slope - 2.0).abs() < 0.3, "{slope}");
    for fam in &r.families {
        assert_eq!(fam.status, Status::Pass, "{}: {}", fam.name, fam.detail);
    }
}

#[test]
fn reports_are_deterministic() {
    let a = run_convergence(&setup("sine", sine)).unwrap();
    let b = run_convergence(&setup("sine", sine)).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        let bits = |r: [f64; 24]| r.map(f64::to_bits);
        assert_eq!(bits(x.numbers()), bits(y.numbers()));
    }
}

#[test]
fn violated_condition_is_annotated() {
    let mut s = setup("over", sine);
    s.exps = ExponentSet::new(1, 2.0, 3.2, 1.0).unwrap();
    let r = run_convergence(&s).unwrap();
    assert!(r.condition_failed);
    assert!(r.blowup_exponent < 0.0);
    assert_eq!(r.exit_code(), 2);
    assert!(r.rows.iter().all(|row| row.annotation.contains("condition-failed")));
}

#[test]
fn under_resolved_scales_are_skipped() {
    let mut s = setup("fine", sine);
    s.field = GridField::from_fn(qtilde(), 161, 401, sine).unwrap();
    s.h_values = vec![0.4, 0.2, 0.1, 0.05];
    let r = run_convergence(&s).unwrap();
    assert_eq!(r.skipped.len(), 1);
    assert_eq!(r.skipped[0].h, 0.05);
    assert_eq!(r.h_values(), vec![0.4, 0.2, 0.1]);
}
