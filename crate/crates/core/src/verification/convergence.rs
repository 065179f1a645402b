//! Per-`h` convergence study of `[w]^h → w` with all proof-side quantities.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::ExponentSet;
use crate::functionals::{c_l2, energy_parts, integrand_value, l2_sup, lp_w1p_from_parts, EnergyBreakdown};
use crate::gap::{blowup_exponent, gap, GapVerdict, Regime};
use crate::geometry::Cylinder;
use crate::grid::{gradient, is_interior, GridField};
use crate::kernel::{check_resolution, mollify_vector, mollify_window, MollifierKernel, SpatialProfile};
use crate::math::{abs, powf, sqrt};
use crate::quadrature::integrate_spacetime;
use crate::weight::Weight;

use super::decomposition::decompose;
use super::eps_quad;
use super::inequalities::{blowup_fit, jensen_from, star_from, BlowupFit, Level, StarInputs};
use super::rates::{fit_power_law, RATE_POINTS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Largest relative gap allowed at the smallest `h`.
    pub convergence_rel: f64,
    /// Slack on fitted slopes.
    pub rate_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { convergence_rel: 1e-3, rate_tol: 0.1 }
    }
}

/// Everything one study needs. `field` lives on the grid of the outer
/// cylinder `Q̃`; every `h` must keep `Q + Q_h(0)` inside it.
#[derive(Debug, Clone)]
pub struct ConvergenceSetup {
    pub name: String,
    pub field: GridField,
    pub weight: Weight,
    pub exps: ExponentSet,
    pub regime: Regime,
    pub q: Cylinder,
    pub h_values: Vec<f64>,
    pub tolerances: Tolerances,
    pub profile: SpatialProfile,
}

/// One row of the report, one per resolved `h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub h: f64,
    pub norm_gap_lpw1p: f64,
    pub norm_gap_cl2: f64,
    pub energy_gap_p: f64,
    pub energy_gap_f: f64,
    pub energy_p: f64,
    pub energy_f: f64,
    pub grad_sup: f64,
    pub jensen_margin: f64,
    pub coef_margin: f64,
    pub star_margin: f64,
    pub star_identity_residual: f64,
    pub second_jensen_margin: f64,
    pub domination_ratio: f64,
    pub pointwise_h_gap: f64,
    pub dominating_l1_gap: f64,
    pub commute_discrepancy: f64,
    pub i1_sup: f64,
    pub i2_sup: f64,
    pub omega_h2: f64,
    pub ftc_margin: f64,
    pub tail_integral: f64,
    pub star_prefactor: f64,
    pub eps_quad: f64,
    pub annotation: String,
}

impl ReportRow {
    /// CSV header, in column order. The last column is the text annotation.
    pub const COLUMNS: [&'static str; 25] = [
        "h",
        "norm_gap_lpw1p",
        "norm_gap_cl2",
        "energy_gap_p",
        "energy_gap_f",
        "energy_p",
        "energy_f",
        "grad_sup",
        "jensen_margin",
        "coef_margin",
        "star_margin",
        "star_identity_residual",
        "second_jensen_margin",
        "domination_ratio",
        "pointwise_h_gap",
        "dominating_l1_gap",
        "commute_discrepancy",
        "i1_sup",
        "i2_sup",
        "omega_h2",
        "ftc_margin",
        "tail_integral",
        "star_prefactor",
        "eps_quad",
        "annotation",
    ];

    /// The numeric columns, in [`Self::COLUMNS`] order.
    pub fn numbers(&self) -> [f64; 24] {
        [
            self.h,
            self.norm_gap_lpw1p,
            self.norm_gap_cl2,
            self.energy_gap_p,
            self.energy_gap_f,
            self.energy_p,
            self.energy_f,
            self.grad_sup,
            self.jensen_margin,
            self.coef_margin,
            self.star_margin,
            self.star_identity_residual,
            self.second_jensen_margin,
            self.domination_ratio,
            self.pointwise_h_gap,
            self.dominating_l1_gap,
            self.commute_discrepancy,
            self.i1_sup,
            self.i2_sup,
            self.omega_h2,
            self.ftc_margin,
            self.tail_integral,
            self.star_prefactor,
            self.eps_quad,
        ]
    }

    pub fn from_numbers(v: [f64; 24], annotation: String) -> Self {
        Self {
            h: v[0],
            norm_gap_lpw1p: v[1],
            norm_gap_cl2: v[2],
            energy_gap_p: v[3],
            energy_gap_f: v[4],
            energy_p: v[5],
            energy_f: v[6],
            grad_sup: v[7],
            jensen_margin: v[8],
            coef_margin: v[9],
            star_margin: v[10],
            star_identity_residual: v[11],
            second_jensen_margin: v[12],
            domination_ratio: v[13],
            pointwise_h_gap: v[14],
            dominating_l1_gap: v[15],
            commute_discrepancy: v[16],
            i1_sup: v[17],
            i2_sup: v[18],
            omega_h2: v[19],
            ftc_margin: v[20],
            tail_integral: v[21],
            star_prefactor: v[22],
            eps_quad: v[23],
            annotation,
        }
    }

    /// Value of a numeric column by name.
    pub fn get(&self, column: &str) -> Option<f64> {
        let i = Self::COLUMNS.iter().position(|c| *c == column)?;
        self.numbers().get(i).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    /// Failed, but the family is only asserted under the gap condition, which
    /// does not hold.
    Waived,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyVerdict {
    pub name: String,
    /// Asserted only when the regime's gap condition holds.
    pub conditional: bool,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedRate {
    pub column: String,
    pub slope: Option<f64>,
    pub prefactor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedH {
    pub h: f64,
    pub reason: String,
}

/// The unmollified field's own quantities on `Q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reference {
    pub energy: EnergyBreakdown,
    pub norm_lpw1p: f64,
    pub norm_cl2: f64,
    /// `∬ H(·, Dw)` over the whole grid of `Q̃`.
    pub energy_qtilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub name: String,
    pub regime: Regime,
    pub exps: ExponentSet,
    pub verdict: GapVerdict,
    pub blowup_exponent: f64,
    pub condition_failed: bool,
    pub reference: Reference,
    pub rows: Vec<ReportRow>,
    pub skipped: Vec<SkippedH>,
    pub fitted_rates: Vec<FittedRate>,
    pub blowup: Option<BlowupFit>,
    pub families: Vec<FamilyVerdict>,
}

impl ConvergenceReport {
    pub fn h_values(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.h).collect()
    }

    /// A numeric column across rows.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        self.rows.iter().map(|r| r.get(name)).collect()
    }

    pub fn family(&self, name: &str) -> Option<&FamilyVerdict> {
        self.families.iter().find(|f| f.name == name)
    }

    pub fn has_failure(&self) -> bool {
        self.families.iter().any(|f| f.status == Status::Fail)
    }

    /// `0` all pass, `1` numerical failure, `2` gap condition violated without
    /// a numerical failure.
    pub fn exit_code(&self) -> i32 {
        if self.has_failure() {
            1
        } else if self.condition_failed {
            2
        } else {
            0
        }
    }
}

pub const RATE_COLUMNS: [&str; 13] = [
    "norm_gap_lpw1p",
    "norm_gap_cl2",
    "energy_gap_p",
    "energy_gap_f",
    "grad_sup",
    "domination_ratio",
    "pointwise_h_gap",
    "dominating_l1_gap",
    "i1_sup",
    "i2_sup",
    "omega_h2",
    "tail_integral",
    "star_prefactor",
];

/// Per-row pass flags kept for the family verdicts.
struct RowChecks {
    jensen: bool,
    coefficient: bool,
    star: bool,
    second: bool,
    commutation: bool,
    decomposition: bool,
    ftc: bool,
    reverse_triangle: bool,
}

/// Mollifies at every `h`, evaluates all report columns and the verdict of
/// every invariant family.
///
/// Scales that the grid cannot resolve are skipped and listed; any other
/// error aborts the study.
pub fn run_convergence(setup: &ConvergenceSetup) -> Result<ConvergenceReport> {
    let w = &setup.field;
    let exps = &setup.exps;
    let weight = &setup.weight;
    let q = &setup.q;
    let (p, qq) = (exps.p(), exps.q());
    if w.dim() != exps.n() {
        return Err(Error::DimensionMismatch { expected: exps.n(), found: w.dim() });
    }
    if setup.h_values.windows(2).any(|h| !(h[1] < h[0])) {
        return Err(Error::InvalidArgument(format!("h values must be strictly decreasing: {:?}", setup.h_values)));
    }
    let kernel = MollifierKernel::new(w.dim())?.with_profile(setup.profile);
    let verdict = gap(setup.regime, exps)?;
    let e = blowup_exponent(setup.regime, exps)?;
    let condition_failed = !verdict.satisfied;
    let (dx, dt) = (w.dx(), w.dt());

    let grad = gradient(w)?;
    let gnorm = grad.norm();
    let a_full = weight.field_on(w)?;
    let dwp = gnorm.map(|g| powf(g, p));
    let h_full = gnorm.zip_map(&a_full, |g, a| integrand_value(a, p, qq, g))?;
    let energy_qtilde = integrate_spacetime(&h_full);
    if !energy_qtilde.is_finite() {
        return Err(Error::InvalidArgument("the energy of w on the outer cylinder is not finite".into()));
    }

    let win = w.window_for(q)?;
    let w_q = w.restrict(&win)?;
    let grad_q = grad.restrict(&win)?;
    let gnorm_q = gnorm.restrict(&win)?;
    let a_q = a_full.restrict(&win)?;
    let h_q = h_full.restrict(&win)?;
    let mut energy_w = energy_parts(&gnorm_q, &a_q, exps)?;
    energy_w.l2_sup = l2_sup(&w_q);
    energy_w.total_f = energy_w.l2_sup + energy_w.total_p;
    let reference = Reference {
        energy: energy_w,
        norm_lpw1p: lp_w1p_from_parts(&w_q, &gnorm_q, p)?,
        norm_cl2: c_l2(&w_q),
        energy_qtilde,
    };
    let a_max = a_q.max_abs();

    let mut rows = Vec::new();
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    for &h in &setup.h_values {
        if let Err(err @ Error::UnderResolved { .. }) = check_resolution(w, h) {
            skipped.push(SkippedH { h, reason: err.to_string() });
            continue;
        }
        let level = Level::new(&kernel, w, h, q)?;
        let stencil = kernel.stencil(h, dx, dt)?;
        let gh = level.grad_wh.norm();

        let diff = level.wh.zip_map(&w_q, |a, b| a - b)?;
        let grad_diff = level.grad_wh.components().iter().zip(grad_q.components()).try_fold(
            gnorm_q.map(|_| 0.0),
            |acc, (a, b)| {
                let d = a.zip_map(b, |x, y| (x - y) * (x - y))?;
                acc.zip_map(&d, |s, v| s + v)
            },
        )?;
        let grad_diff = grad_diff.map(sqrt);
        let norm_gap_lpw1p = lp_w1p_from_parts(&diff, &grad_diff, p)?;
        let norm_gap_cl2 = c_l2(&diff);

        let mut energy_h = energy_parts(&gh, &a_q, exps)?;
        energy_h.l2_sup = l2_sup(&level.wh);
        energy_h.total_f = energy_h.l2_sup + energy_h.total_p;

        let dwp_h = mollify_window(&kernel, &dwp, h, &win)?;
        let jensen = jensen_from(&level, &dwp_h, p, dx, dt);

        let a_h = weight.shifted_on(&level.wh, h)?;
        let h_dw_h = mollify_window(&kernel, &h_full, h, &win)?;
        let star = star_from(&level, &StarInputs { a: &a_q, a_h: &a_h, h_dw_h: &h_dw_h }, weight, exps, verdict, dx, dt);

        let h_node = gh.zip_map(&a_q, |g, a| integrand_value(a, p, qq, g))?;
        let dominating = integrate_spacetime(&h_dw_h);
        let domination_ratio = if dominating > 0.0 {
            energy_h.total_p / dominating
        } else if energy_h.total_p == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
        let pointwise_h_gap = integrate_spacetime(&h_node.zip_map(&h_q, |a, b| abs(a - b))?);
        let dominating_l1_gap = integrate_spacetime(&h_dw_h.zip_map(&h_q, |a, b| abs(a - b))?);

        let dw_h = mollify_vector(&kernel, &grad, h, &win)?;
        let (m, n) = (level.wh.nx(), level.wh.dim());
        let commute = level.grad_wh.max_distance(&dw_h, |s| is_interior(s, m, n))?;
        let commute_scale = dw_h.norm().max_abs();

        let dec = decompose(w, &grad, &level, &stencil);

        let l2_w = reference.norm_cl2;
        let l2_wh = c_l2(&level.wh);
        let reverse_gap = abs(energy_h.l2_sup - energy_w.l2_sup);
        let reverse_bound = 2.0 * norm_gap_cl2 * l2_w.max(l2_wh);

        checks.push(RowChecks {
            jensen: jensen.pass,
            coefficient: star.coef_margin >= -1e-12 * (1.0 + a_max),
            star: star.identity_residual <= 1e-12 * (1.0 + h_node.max_abs())
                && star.star_margin >= -star.eps_star,
            second: star.second_jensen_margin >= -star.eps_second,
            commutation: commute <= eps_quad(dx, dt, commute_scale) + 1e-12 * commute_scale,
            decomposition: dec.holds,
            ftc: dec.ftc_margin >= -dec.eps,
            reverse_triangle: reverse_gap <= reverse_bound + eps_quad(dx, dt, energy_w.l2_sup.max(energy_h.l2_sup)),
        });
        rows.push(ReportRow {
            h,
            norm_gap_lpw1p,
            norm_gap_cl2,
            energy_gap_p: abs(energy_h.total_p - energy_w.total_p),
            energy_gap_f: abs(energy_h.total_f - energy_w.total_f),
            energy_p: energy_h.total_p,
            energy_f: energy_h.total_f,
            grad_sup: gh.max_abs(),
            jensen_margin: jensen.min_margin,
            coef_margin: star.coef_margin,
            star_margin: star.star_margin,
            star_identity_residual: star.identity_residual,
            second_jensen_margin: star.second_jensen_margin,
            domination_ratio,
            pointwise_h_gap,
            dominating_l1_gap,
            commute_discrepancy: commute,
            i1_sup: dec.i1_sup,
            i2_sup: dec.i2_sup,
            omega_h2: dec.omega_h2,
            ftc_margin: dec.ftc_margin,
            tail_integral: dec.tail_integral,
            star_prefactor: powf(h, e),
            eps_quad: eps_quad(dx, dt, 1.0),
            annotation: if condition_failed { "condition-failed".into() } else { "ok".into() },
        });
    }
    if rows.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, found: 0 });
    }

    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let col = |name: &str| -> Vec<f64> { rows.iter().map(|r| r.get(name).unwrap_or(f64::NAN)).collect() };
    let fitted_rates = RATE_COLUMNS
        .iter()
        .map(|c| {
            let fit = fit_power_law(&hs, &col(c), RATE_POINTS);
            FittedRate { column: (*c).into(), slope: fit.map(|f| f.0), prefactor: fit.map(|f| f.1) }
        })
        .collect();
    let blowup = if hs.len() >= 3 { Some(blowup_fit(setup.regime, exps, &hs, &col("grad_sup"))?) } else { None };

    let mut families = Vec::new();
    let mut push = |name: &str, conditional: bool, ok: bool, detail: String| {
        let status = match (ok, conditional && condition_failed) {
            (true, _) => Status::Pass,
            (false, true) => Status::Waived,
            (false, false) => Status::Fail,
        };
        families.push(FamilyVerdict { name: name.into(), conditional, status, detail });
    };
    let all = |f: fn(&RowChecks) -> bool| checks.iter().all(f);
    let min_of = |name: &str| col(name).into_iter().fold(f64::INFINITY, f64::min);
    let max_of = |name: &str| col(name).into_iter().fold(0.0, f64::max);

    push("jensen", false, all(|c| c.jensen), format!("min margin {:e}", min_of("jensen_margin")));
    push("coefficient", false, all(|c| c.coefficient), format!("min margin {:e}", min_of("coef_margin")));
    push(
        "star",
        false,
        all(|c| c.star),
        format!("min margin {:e}, identity residual {:e}", min_of("star_margin"), max_of("star_identity_residual")),
    );
    push("second_jensen", false, all(|c| c.second), format!("min margin {:e}", min_of("second_jensen_margin")));
    push("commutation", false, all(|c| c.commutation), format!("max discrepancy {:e}", max_of("commute_discrepancy")));
    push(
        "decomposition",
        false,
        all(|c| c.decomposition) && all(|c| c.ftc),
        format!("min FTC margin {:e}", min_of("ftc_margin")),
    );
    push("l2_reverse_triangle", false, all(|c| c.reverse_triangle), String::new());

    let i1 = col("i1_sup");
    let (i1_ok, i1_detail) = if i1.iter().all(|v| *v == 0.0) {
        (true, "I1 vanishes".to_string())
    } else if p > 2.0 {
        let need = 1.0 - 2.0 / p - setup.tolerances.rate_tol;
        match (hs.len() >= 3).then(|| fit_power_law(&hs, &i1, RATE_POINTS)).flatten() {
            Some((slope, _)) => (slope >= need, format!("I1 slope {slope:.4} (need >= {need:.4})")),
            None => (false, "too few scales for an I1 slope".into()),
        }
    } else {
        let tail = col("tail_integral");
        let ok = tail.windows(2).all(|t| t[1] < t[0]) && i1.last() < i1.first();
        (ok, format!("tail {:e} -> {:e}", tail[0], tail[tail.len() - 1]))
    };
    push("i1_rate", false, i1_ok, i1_detail);

    let tol = setup.tolerances.convergence_rel;
    let rel = |x: f64, r: f64| if r > 0.0 { x / r } else { x };
    let last = rows.last().expect("rows is non-empty");
    let finals = [
        ("norm_gap_lpw1p", reference.norm_lpw1p),
        ("norm_gap_cl2", reference.norm_cl2),
        ("energy_gap_p", energy_w.total_p),
        ("energy_gap_f", energy_w.total_f),
    ]
    .map(|(c, r)| (c, r, rel(last.get(c).unwrap_or(f64::NAN), r)));
    let conv_ok = finals.iter().all(|(c, r, v)| {
        let gaps = col(c);
        let noise = gaps.iter().all(|g| rel(*g, *r) <= ROUNDING_REL);
        *v <= tol && (noise || decreasing(&gaps))
    });
    let conv_detail = finals.iter().map(|(c, _, v)| format!("{c} {v:.3e}")).collect::<Vec<_>>().join(", ");
    push("convergence", true, conv_ok, conv_detail);

    let dom_ok = decreasing(&col("pointwise_h_gap")) && decreasing(&col("dominating_l1_gap"));
    push("dominated", true, dom_ok, format!("pointwise {:e}, dominating {:e}", last.pointwise_h_gap, last.dominating_l1_gap));

    // The star chain bounds the ratio by 1 plus a multiple of h^e, so only an
    // excess over 1 can grow; it must not grow faster than the rate tolerance.
    let ratio = col("domination_ratio");
    let excess: Vec<f64> = ratio.iter().map(|r| (r - 1.0).max(0.0)).collect();
    let excess_slope = fit_power_law(&hs, &excess, RATE_POINTS).map(|f| f.0);
    let ratio_ok = ratio.iter().all(|r| r.is_finite())
        && match excess_slope {
            Some(s) => s >= -setup.tolerances.rate_tol,
            None => decreasing(&excess) || excess.iter().all(|e| *e == 0.0),
        };
    push(
        "domination_ratio",
        true,
        ratio_ok,
        format!(
            "max ratio {:.4}, excess slope {}",
            max_of("domination_ratio"),
            excess_slope.map_or("n/a".into(), |s| format!("{s:.4}"))
        ),
    );

    match &blowup {
        Some(b) => push(
            "gradient_bound",
            true,
            b.pass,
            format!("slope {} (bound {:.4})", b.slope.map_or("n/a".into(), |s| format!("{s:.4}")), b.bound),
        ),
        None => push("gradient_bound", true, false, "fewer than 3 resolved scales".into()),
    }

    Ok(ConvergenceReport {
        name: setup.name.clone(),
        regime: setup.regime,
        exps: *exps,
        verdict,
        blowup_exponent: e,
        condition_failed,
        reference,
        rows,
        skipped,
        fitted_rates,
        blowup,
        families,
    })
}

/// Relative size below which a gap column is rounding noise.
const ROUNDING_REL: f64 = 1e-12;

/// Last value below the first, or everything already zero.
fn decreasing(v: &[f64]) -> bool {
    match (v.first(), v.last()) {
        (Some(a), Some(b)) => b < a || (*a == 0.0 && *b == 0.0),
        _ => false,
    }
}
