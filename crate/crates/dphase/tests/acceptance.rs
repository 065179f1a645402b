//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any of them fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use dphase::builtin;
use dphase::run::{run_suite, RunOutcome, EXIT_CONDITION};
use dphase::scenario::Scenario;
use dphase_core::gap::{blowup_exponent, gap};
use dphase_core::kernel::mollify_gradient_commute_check;
use dphase_core::grid::gradient;
use dphase_core::verification::rates::fit_power_law;
use dphase_core::verification::{eps_quad, run_convergence, ConvergenceReport, Status};
use dphase_core::{ExponentSet, GridField, MollifierKernel, Regime, Weight};
use quadrature::double_exponential;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

const MASS_DX: f64 = 1.0 / 512.0;
const MASS_DT: f64 = 1.0 / 32768.0;

struct Line {
    ok: bool,
    what: &'static str,
    measured: String,
}

fn line(ok: bool, what: &'static str, measured: String) -> Line {
    Line { ok, what, measured }
}

fn bump(s: f64) -> f64 {
    if s * s < 1.0 {
        (1.0 / (s * s - 1.0)).exp()
    } else {
        0.0
    }
}

/// Normalisation constant by tanh-sinh quadrature in polar coordinates.
fn oracle_constant(n: usize) -> f64 {
    let sphere = match n {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        _ => 4.0 * std::f64::consts::PI,
    };
    let r = double_exponential::integrate(|r| r.powi(n as i32 - 1) * bump(r), 0.0, 1.0, 1e-14);
    1.0 / (sphere * r.integral)
}

fn scenario(name: &str) -> Scenario {
    Scenario::from_config(builtin::by_name(name).expect("built-in exists"), None).expect("built-in is valid")
}

fn kernel_mass() -> Line {
    let start = Instant::now();
    let mut worst_mass = 0.0f64;
    let mut worst_c = 0.0f64;
    for n in 1..=3 {
        let k = MollifierKernel::new(n).unwrap();
        worst_c = worst_c.max((k.c_n() - oracle_constant(n)).abs());
        for h in [0.2, 0.1, 0.05] {
            let m = k.discrete_mass(h, MASS_DX, MASS_DT).unwrap();
            worst_mass = worst_mass.max((m - 1.0).abs());
        }
    }
    let t = start.elapsed();
    line(
        worst_mass <= 1e-6 && worst_c <= 1e-8 && t < Duration::from_secs(1),
        "kernel mass and normalisation constants",
        format!("mass err {worst_mass:.2e}, constant err {worst_c:.2e}, {:.2} s", t.as_secs_f64()),
    )
}

fn commutation() -> Line {
    let start = Instant::now();
    let sc = scenario("general-interior-smooth");
    let like = sc.setup();
    let dom = like.field.domain().clone();
    let (nx, nt) = (like.field.nx(), like.field.nt());
    let k = MollifierKernel::new(2).unwrap();
    let quad = GridField::from_fn(dom.clone(), nx, nt, |x, t| x[0] * x[0] + t * x[0]).unwrap();
    let affine = GridField::from_fn(dom, nx, nt, |x, t| 0.3 - 1.2 * x[0] + 0.7 * x[1] + 2.0 * t).unwrap();
    let (dx, dt) = (quad.dx(), quad.dt());
    let scale = gradient(&quad).unwrap().norm().max_abs();
    let mut ok = true;
    let mut worst_q = 0.0f64;
    let mut worst_a = 0.0f64;
    let mut allowed = f64::INFINITY;
    for h in [0.128, 0.064] {
        let dq = mollify_gradient_commute_check(&k, &quad, h, &like.q).unwrap();
        let da = mollify_gradient_commute_check(&k, &affine, h, &like.q).unwrap();
        allowed = eps_quad(dx, dt, scale);
        ok &= dq <= allowed && da <= 1e-12;
        worst_q = worst_q.max(dq);
        worst_a = worst_a.max(da);
    }
    let t = start.elapsed();
    line(
        ok && t < Duration::from_secs(5),
        "gradient and mollification commute",
        format!("quadratic {worst_q:.2e} (eps {allowed:.2e}), affine {worst_a:.2e}, {:.2} s", t.as_secs_f64()),
    )
}

fn jensen(runs: &[RunOutcome]) -> Line {
    let matrix: Vec<String> = builtin::matrix().into_iter().map(|c| c.name).collect();
    let mut failing = Vec::new();
    for o in runs.iter().filter(|o| matrix.contains(&o.report.name)) {
        if o.report.family("jensen").map(|f| f.status) != Some(Status::Pass) {
            failing.push(o.report.name.clone());
        }
    }
    let affine = report(runs, "affine");
    let worst = affine.column("jensen_margin").unwrap().into_iter().fold(0.0f64, |m, v| m.max(v.abs()));
    line(
        failing.is_empty() && worst <= 1e-12,
        "gradient Jensen inequality",
        format!("failing {failing:?}, affine |margin| {worst:.2e}"),
    )
}

fn coefficient_bound() -> Line {
    let hs: Vec<f64> = (0..6).map(|m| 0.2 * 0.5f64.powi(m)).collect();
    let mut checked = 0usize;
    let mut violations = 0usize;
    let mut worst = f64::NEG_INFINITY;
    for lambda in [0.5, 1.0, 3.0] {
        for alpha in [0.25, 0.5, 1.0] {
            let w = Weight::ramp(lambda, alpha, 0, -0.1).unwrap();
            for &h in &hs {
                let bound = lambda * h.powf(alpha);
                for i in 0..=400 {
                    let x = -1.0 + 2.0 * i as f64 / 400.0;
                    for t in [0.1, 0.5, 0.9] {
                        let a = w.eval(&[x], t);
                        let gap = a - w.shifted(&[x], t, h).unwrap();
                        worst = worst.max(gap - bound);
                        checked += 1;
                        // the subtraction itself is only exact up to a few ulp of a
                        if gap > bound + 4.0 * f64::EPSILON * (a + bound) {
                            violations += 1;
                        }
                    }
                }
            }
        }
    }
    line(
        violations == 0,
        "coefficient bound a - a_h <= [a] h^alpha",
        format!("{violations} of {checked} nodes violate, max excess {worst:.2e}"),
    )
}

fn gap_sweep() -> Line {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut sets = 0usize;
    let mut disagree = 0usize;
    while sets < 10_000 {
        let n = rng.random_range(1..=6usize);
        let p = rng.random_range(1.2..8.0);
        let alpha = rng.random_range(0.01..=1.0);
        let q = p + rng.random_range(0.0..2.0) * alpha;
        let s = if rng.random_bool(0.2) { f64::INFINITY } else { rng.random_range(1.0..50.0) };
        let Ok(e) = ExponentSet::new(n, p, q, alpha).and_then(|e| e.with_s(s)) else { continue };
        sets += 1;
        for r in Regime::ALL {
            let v = gap(r, &e).unwrap();
            let x = blowup_exponent(r, &e).unwrap();
            if v.satisfied != (x >= 0.0) {
                disagree += 1;
            }
        }
    }
    line(disagree == 0, "gap verdicts agree with blow-up exponents", format!("{disagree} disagreements in {sets} sets"))
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|p| p[1] < p[0])
}

fn last_rel(r: &ConvergenceReport, col: &str, reference: f64) -> f64 {
    r.column(col).unwrap().last().copied().unwrap() / reference
}

fn boundary_convergence() -> Line {
    let start = Instant::now();
    let sc = scenario("general-boundary-smooth");
    let r = run_convergence(&sc.setup()).unwrap();
    let t = start.elapsed();
    let tail = |c: &str| {
        let v = r.column(c).unwrap();
        v[v.len().saturating_sub(4)..].to_vec()
    };
    let rel = last_rel(&r, "energy_gap_p", r.reference.energy.total_p);
    let ok = r.rows.len() >= 4
        && decreasing(&tail("norm_gap_lpw1p"))
        && decreasing(&tail("energy_gap_p"))
        && rel <= 1e-3
        && t < Duration::from_secs(60);
    line(
        ok,
        "energy convergence at the gap bound",
        format!("{} scales, final energy gap {rel:.2e} relative, {:.1} s", r.rows.len(), t.as_secs_f64()),
    )
}

fn report<'a>(runs: &'a [RunOutcome], name: &str) -> &'a ConvergenceReport {
    &runs.iter().find(|o| o.report.name == name).expect("scenario ran").report
}

fn blowup_slopes(runs: &[RunOutcome]) -> Line {
    let mut ok = true;
    let mut parts = Vec::new();
    for o in runs {
        let r = &o.report;
        let bound = match r.regime {
            Regime::Bounded => -1.0 - 0.1,
            Regime::SIntegrable => {
                let (n, s) = (r.exps.n() as f64, r.exps.s().unwrap());
                -(n + s) / s - 0.1
            }
            Regime::General => continue,
        };
        let slope = r.blowup.as_ref().and_then(|b| b.slope);
        ok &= slope.is_some_and(|s| s >= bound);
        parts.push(format!("{} {:.3}", r.name, slope.unwrap_or(f64::NAN)));
    }
    line(ok && !parts.is_empty(), "gradient blow-up slopes", parts.join(", "))
}

fn cl2_convergence(runs: &[RunOutcome]) -> Line {
    let r = report(runs, "general-boundary-smooth");
    let gaps = r.column("norm_gap_cl2").unwrap();
    let rel = last_rel(r, "norm_gap_cl2", r.reference.norm_cl2);
    let l2_w = r.reference.energy.l2_sup;
    let mut worst = f64::NEG_INFINITY;
    for row in &r.rows {
        let l2_h = row.energy_f - row.energy_p;
        let bound = 2.0 * row.norm_gap_cl2 * r.reference.norm_cl2.max(l2_h.max(0.0).sqrt());
        let slack = row.eps_quad * l2_w.max(l2_h) + 1e-12 * row.energy_f;
        worst = worst.max((l2_h - l2_w).abs() - bound - slack);
    }
    line(
        decreasing(&gaps) && rel <= 1e-3 && worst <= 0.0,
        "C(L2) convergence and reverse triangle",
        format!("final gap {rel:.2e} relative, reverse triangle excess {worst:.2e}"),
    )
}

fn decomposition(runs: &[RunOutcome]) -> Line {
    let mut bad = Vec::new();
    for o in runs {
        let r = &o.report;
        for row in &r.rows {
            if row.norm_gap_cl2 > row.i1_sup + row.i2_sup + row.eps_quad * r.reference.norm_cl2 {
                bad.push(format!("{}@{}", r.name, row.h));
            }
        }
    }
    let i2_still = report(runs, "time-independent").column("i2_sup").unwrap().iter().all(|v| *v == 0.0);
    let i1_flat = report(runs, "space-independent").column("i1_sup").unwrap().iter().all(|v| *v == 0.0);
    let p4 = report(runs, "p4-smooth");
    let hs = p4.h_values();
    let slope = fit_power_law(&hs, &p4.column("i1_sup").unwrap(), hs.len()).map(|f| f.0);
    let need = 1.0 - 2.0 / p4.exps.p() - 0.1;
    line(
        bad.is_empty() && i2_still && i1_flat && slope.is_some_and(|s| s >= need),
        "I1 + I2 decomposition",
        format!(
            "violations {bad:?}, I2 = 0: {i2_still}, I1 = 0: {i1_flat}, p = 4 I1 slope {:.3}",
            slope.unwrap_or(f64::NAN)
        ),
    )
}

fn failure_mode(runs: &[RunOutcome]) -> Line {
    let o = runs.iter().find(|o| o.report.name == "general-violated-smooth").expect("scenario ran");
    let r = &o.report;
    let e = r.blowup_exponent;
    let pre = r.column("star_prefactor").unwrap();
    let need = 2f64.powf(e.abs() * 0.9);
    let min_ratio = pre.windows(2).map(|p| p[1] / p[0]).fold(f64::INFINITY, f64::min);
    line(
        e < 0.0 && min_ratio >= need && o.exit_code() == EXIT_CONDITION,
        "violated gap condition is flagged",
        format!("e {e:.4}, min growth {min_ratio:.4} (need {need:.4}), exit {}", o.exit_code()),
    )
}

fn main() -> ExitCode {
    let mut lines = vec![kernel_mass(), commutation()];

    let out = tempfile::tempdir().expect("temp dir");
    let scenarios: Vec<Scenario> =
        builtin::all().into_iter().map(|c| Scenario::from_config(c, None).expect("built-in is valid")).collect();
    let start = Instant::now();
    let suite = run_suite(&scenarios, out.path(), 0, false).expect("suite runs");
    let suite_time = start.elapsed();
    let runs = &suite.outcomes;

    lines.push(jensen(runs));
    lines.push(coefficient_bound());
    lines.push(gap_sweep());
    lines.push(boundary_convergence());
    lines.push(blowup_slopes(runs));
    lines.push(cl2_convergence(runs));
    lines.push(decomposition(runs));
    lines.push(failure_mode(runs));
    lines.push(line(
        suite_time < Duration::from_secs(600),
        "full built-in suite",
        format!("{} scenarios in {:.1} s, suite exit {}", runs.len(), suite_time.as_secs_f64(), suite.exit_code),
    ));

    let mut failed = 0;
    for (i, l) in lines.iter().enumerate() {
        println!("{} {:>2} {}: {}", if l.ok { "PASS" } else { "FAIL" }, i + 1, l.what, l.measured);
        failed += usize::from(!l.ok);
    }
    println!("{} of {} criteria pass", lines.len() - failed, lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
