//! Nodewise inequality checks at one mollification scale.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exponents::ExponentSet;
use crate::functionals::integrand_value;
use crate::gap::{gap, GapVerdict, Regime};
use crate::geometry::Cylinder;
use crate::grid::{gradient, GridField, VectorField, Window};
use crate::kernel::{check_containment, mollify_window, prepare, MollifierKernel};
use crate::math::{abs, powf};
use crate::weight::Weight;

use super::eps_quad;
use super::rates::{fit_slope, RATE_POINTS};

/// `[w]^h` and `D([w]^h)` at the nodes of `Q` for one `h`.
pub(crate) struct Level {
    pub h: f64,
    pub win: Window,
    pub wh: GridField,
    pub grad_wh: VectorField,
}

impl Level {
    /// Mollifies on `Q`'s window grown by one node where the kernel support
    /// still fits, so that `D([w]^h)` is a central difference at every node
    /// of `Q`, including its faces.
    pub fn new(kernel: &MollifierKernel, w: &GridField, h: f64, q: &Cylinder) -> Result<Self> {
        check_containment(w, h, q)?;
        let win = w.window_for(q)?;
        prepare(kernel, w, h, &win)?;
        if win.lo.iter().all(|&a| a >= 1) && win.lo.iter().all(|&a| a + win.m + 1 <= w.nx()) {
            let ext = Window { lo: win.lo.iter().map(|a| a - 1).collect(), m: win.m + 2, t0: win.t0, mt: win.mt };
            if prepare(kernel, w, h, &ext).is_ok() {
                let wh_ext = mollify_window(kernel, w, h, &ext)?;
                let inner = Window { lo: vec![1; w.dim()], m: win.m, t0: 0, mt: win.mt };
                let grad_wh = gradient(&wh_ext)?.restrict(&inner)?;
                let wh = wh_ext.restrict(&inner)?;
                return Ok(Self { h, win, wh, grad_wh });
            }
        }
        let wh = mollify_window(kernel, w, h, &win)?;
        let grad_wh = gradient(&wh)?;
        Ok(Self { h, win, wh, grad_wh })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JensenCheck {
    pub h: f64,
    /// `min_z ([|Dw|^p]^h - |D[w]^h|^p)`.
    pub min_margin: f64,
    pub eps: f64,
    pub pass: bool,
}

pub(crate) fn jensen_from(level: &Level, dwp_h: &GridField, p: f64, dx: f64, dt: f64) -> JensenCheck {
    let g = level.grad_wh.norm();
    let mut margin = f64::INFINITY;
    let mut scale = 0.0f64;
    for (a, b) in dwp_h.values().iter().zip(g.values()) {
        margin = margin.min(a - powf(*b, p));
        scale = scale.max(*a);
    }
    let eps = eps_quad(dx, dt, scale);
    JensenCheck { h: level.h, min_margin: margin, eps, pass: margin >= -eps }
}

/// `|D[w]^h(z)|^p ≤ [|Dw|^p]^h(z)` at every node of `Q`.
pub fn check_jensen_gradient(kernel: &MollifierKernel, w: &GridField, p: f64, h: f64, q: &Cylinder) -> Result<JensenCheck> {
    let level = Level::new(kernel, w, h, q)?;
    let dwp = gradient(w)?.norm().map(|g| powf(g, p));
    let dwp_h = mollify_window(kernel, &dwp, h, &level.win)?;
    Ok(jensen_from(&level, &dwp_h, p, w.dx(), w.dt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StarCheck {
    pub h: f64,
    /// `max_z |H - ((a - a_h)|ξ|^q + H_h)|` at `ξ = D[w]^h(z)`.
    pub identity_residual: f64,
    /// `min_z ([a]_α h^α - (a - a_h))`.
    pub coef_margin: f64,
    /// `min_z ([a]_α h^α |ξ|^q + H_h(z, ξ) - H(z, ξ))`.
    pub star_margin: f64,
    /// `min_z ([H(·, Dw)]^h - H_h(z, ξ))`.
    pub second_jensen_margin: f64,
    pub eps_star: f64,
    pub eps_second: f64,
    pub verdict: GapVerdict,
    pub pass: bool,
}

/// Fields on the nodes of `Q` that the chain needs besides `level`.
pub(crate) struct StarInputs<'a> {
    pub a: &'a GridField,
    pub a_h: &'a GridField,
    pub h_dw_h: &'a GridField,
}

pub(crate) fn star_from(
    level: &Level,
    inputs: &StarInputs<'_>,
    weight: &Weight,
    exps: &ExponentSet,
    verdict: GapVerdict,
    dx: f64,
    dt: f64,
) -> StarCheck {
    let (p, q) = (exps.p(), exps.q());
    let bound = weight.seminorm() * powf(level.h, weight.alpha());
    let g = level.grad_wh.norm();
    let mut residual = 0.0f64;
    let mut coef = f64::INFINITY;
    let mut star = f64::INFINITY;
    let mut second = f64::INFINITY;
    let mut scale_h = 0.0f64;
    let mut scale_second = 0.0f64;
    let mut scale_a = 0.0f64;
    let vals = g.values().iter().zip(inputs.a.values()).zip(inputs.a_h.values()).zip(inputs.h_dw_h.values());
    for (((&xi, &a), &ah), &hbar) in vals {
        let xq = powf(xi, q);
        let full = integrand_value(a, p, q, xi);
        let shifted = integrand_value(ah, p, q, xi);
        residual = residual.max(abs(full - ((a - ah) * xq + shifted)));
        coef = coef.min(bound - (a - ah));
        star = star.min(bound * xq + shifted - full);
        second = second.min(hbar - shifted);
        scale_h = scale_h.max(full);
        scale_second = scale_second.max(hbar);
        scale_a = scale_a.max(a);
    }
    let eps_star = eps_quad(dx, dt, scale_h);
    let eps_second = eps_quad(dx, dt, scale_second);
    let pass = residual <= 1e-12 * (1.0 + scale_h)
        && coef >= -1e-12 * (1.0 + scale_a)
        && star >= -eps_star
        && second >= -eps_second;
    StarCheck {
        h: level.h,
        identity_residual: residual,
        coef_margin: coef,
        star_margin: star,
        second_jensen_margin: second,
        eps_star,
        eps_second,
        verdict,
        pass,
    }
}

/// The shifted-coefficient chain at `ξ = D[w]^h(z)` on every node of `Q`:
/// the identity `H = (a - a_h)|ξ|^q + H_h`, the coefficient bound
/// `a - a_h ≤ [a]_α h^α`, and `H_h(z, ξ) ≤ [H(·, Dw)]^h(z)`.
///
/// Runs whether or not the regime's gap condition holds; the verdict is
/// carried along.
pub fn check_star_chain(
    kernel: &MollifierKernel,
    w: &GridField,
    weight: &Weight,
    exps: &ExponentSet,
    h: f64,
    q: &Cylinder,
    regime: Regime,
) -> Result<StarCheck> {
    let verdict = gap(regime, exps)?;
    let level = Level::new(kernel, w, h, q)?;
    let a_full = weight.field_on(w)?;
    let h_full = gradient(w)?.norm().zip_map(&a_full, |g, a| integrand_value(a, exps.p(), exps.q(), g))?;
    let h_dw_h = mollify_window(kernel, &h_full, h, &level.win)?;
    let a = weight.field_on(&level.wh)?;
    let a_h = weight.shifted_on(&level.wh, h)?;
    let inputs = StarInputs { a: &a, a_h: &a_h, h_dw_h: &h_dw_h };
    Ok(star_from(&level, &inputs, weight, exps, verdict, w.dx(), w.dt()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupFit {
    pub regime: Regime,
    pub h_values: Vec<f64>,
    /// `max_z |D[w]^h(z)|` over the nodes of `Q`.
    pub grad_sup: Vec<f64>,
    pub slope: Option<f64>,
    /// Smallest slope the regime allows.
    pub bound: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Slope of `sup |D[w]^h|` in `h` allowed by the regime: `-(n+2)/p`, `-1`,
/// or `-(n+s)/s`.
pub fn blowup_bound(regime: Regime, exps: &ExponentSet) -> Result<f64> {
    let n = exps.n() as f64;
    Ok(match regime {
        Regime::General => -(n + 2.0) / exps.p(),
        Regime::Bounded => -1.0,
        Regime::SIntegrable => {
            let s = exps.s().ok_or(Error::MissingS)?;
            if s.is_infinite() {
                -1.0
            } else {
                -(n + s) / s
            }
        }
    })
}

pub const BLOWUP_TOL: f64 = 0.1;

pub(crate) fn blowup_fit(regime: Regime, exps: &ExponentSet, h: &[f64], grad_sup: &[f64]) -> Result<BlowupFit> {
    let bound = blowup_bound(regime, exps)?;
    let slope = fit_slope(h, grad_sup, RATE_POINTS);
    // a gradient that vanishes identically has no rate and cannot blow up
    let flat = grad_sup.iter().all(|g| *g == 0.0);
    let pass = flat || slope.is_some_and(|s| s >= bound - BLOWUP_TOL);
    Ok(BlowupFit {
        regime,
        h_values: h.to_vec(),
        grad_sup: grad_sup.to_vec(),
        slope,
        bound,
        tol: BLOWUP_TOL,
        pass,
    })
}

/// Fits the slope of `log sup |D[w]^h|` against `log h` over the last four
/// scales and compares it with the regime's bound.
pub fn gradient_blowup_rate(
    kernel: &MollifierKernel,
    w: &GridField,
    regime: Regime,
    exps: &ExponentSet,
    h_values: &[f64],
    q: &Cylinder,
) -> Result<BlowupFit> {
    if h_values.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, found: h_values.len() });
    }
    if h_values.windows(2).any(|p| !(p[1] < p[0])) {
        return Err(Error::InvalidArgument(format!("h values must be strictly decreasing: {h_values:?}")));
    }
    let grad_sup = h_values
        .iter()
        .map(|&h| Ok(Level::new(kernel, w, h, q)?.grad_wh.norm().max_abs()))
        .collect::<Result<Vec<f64>>>()?;
    blowup_fit(regime, exps, h_values, &grad_sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (MollifierKernel, Cylinder, Cylinder) {
        let qt = Cylinder::centered(1, 1.0, 0.0, 1.0).unwrap();
        let q = qt.shrink(0.25).unwrap();
        (MollifierKernel::new(1).unwrap(), qt, q)
    }

    #[test]
    fn jensen_is_tight_for_affine_and_constant() {
        let (k, qt, q) = setup();
        let w = GridField::from_fn(qt.clone(), 81, 321, |x, t| 2.0 * x[0] + t).unwrap();
        let j = check_jensen_gradient(&k, &w, 2.0, 0.2, &q).unwrap();
        assert!(j.min_margin.abs() < 1e-12);
        assert!(j.pass);
        let c = GridField::constant(qt, 81, 321, 4.0).unwrap();
        let j = check_jensen_gradient(&k, &c, 3.0, 0.2, &q).unwrap();
        assert_eq!(j.min_margin, 0.0);
    }

    #[test]
    fn jensen_is_strict_on_curved_field() {
        let (k, qt, q) = setup();
        let pi = core::f64::consts::PI;
        let w = GridField::from_fn(qt, 81, 321, |x, _| libm::sin(pi * x[0])).unwrap();
        let j = check_jensen_gradient(&k, &w, 2.0, 0.2, &q).unwrap();
        assert!(j.min_margin > 0.0);
    }

    #[test]
    fn star_chain_constant_weight() {
        let (k, qt, q) = setup();
        let w = GridField::from_fn(qt, 81, 321, |x, t| libm::sin(3.0 * x[0]) * (1.0 + t)).unwrap();
        let wt = Weight::constant(0.5).unwrap();
        let e = ExponentSet::new(1, 2.0, 2.5, 1.0).unwrap();
        let s = check_star_chain(&k, &w, &wt, &e, 0.2, &q, Regime::General).unwrap();
        // seminorm 0 and a - a_h = 0
        assert_eq!(s.coef_margin, 0.0);
        assert!(s.identity_residual < 1e-13);
        assert!(s.second_jensen_margin >= 0.0);
        assert!(s.pass);
    }

    #[test]
    fn coefficient_bound_scales_with_h() {
        let (k, qt, q) = setup();
        let w = GridField::from_fn(qt, 81, 321, |x, _| x[0]).unwrap();
        let wt = Weight::ramp(1.0, 0.5, 0, -2.0).unwrap();
        let e = ExponentSet::new(1, 2.0, 2.5, 0.5).unwrap();
        let a = check_star_chain(&k, &w, &wt, &e, 0.2, &q, Regime::General).unwrap();
        let b = check_star_chain(&k, &w, &wt, &e, 0.1, &q, Regime::General).unwrap();
        assert!(a.pass && b.pass);
        // with offset -2 every node sees a - a_h well below the bound
        assert!(a.coef_margin > 0.0 && b.coef_margin > 0.0);
    }

    #[test]
    fn blowup_needs_three_scales() {
        let (k, qt, q) = setup();
        let w = GridField::constant(qt, 81, 321, 1.0).unwrap();
        let e = ExponentSet::new(1, 2.0, 2.5, 1.0).unwrap();
        assert!(gradient_blowup_rate(&k, &w, Regime::General, &e, &[0.2, 0.1], &q).is_err());
        let fit = gradient_blowup_rate(&k, &w, Regime::General, &e, &[0.2, 0.1, 0.05], &q);
        // h = 0.05 is under-resolved on this grid
        assert!(fit.is_err());
    }

    #[test]
    fn smooth_field_gradient_stays_bounded() {
        let (k, qt, q) = setup();
        let w = GridField::from_fn(qt, 201, 801, |x, _| libm::sin(2.0 * x[0])).unwrap();
        let e = ExponentSet::new(1, 2.0, 2.5, 1.0).unwrap();
        let fit = gradient_blowup_rate(&k, &w, Regime::Bounded, &e, &[0.2, 0.1, 0.05], &q).unwrap();
        assert!(fit.slope.unwrap().abs() < 0.1);
        assert!(fit.pass);
    }
}
