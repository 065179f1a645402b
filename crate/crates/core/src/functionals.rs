//! The double-phase integrand, the energies `𝓟` and `𝓕`, and the
//! Bochner-type norms used to measure approximation.
//!
//! ```text
//! H(z, ξ)   = |ξ|^p + a(z)   |ξ|^q
//! H_h(z, ξ) = |ξ|^p + a_h(z) |ξ|^q
//! 𝓟(w, Q)   = ∬_Q H(z, Dw) dz
//! 𝓕(w, Q)   = sup_t ∫_B |w(x, t)|² dx + 𝓟(w, Q)
//! ```

use alloc::vec::Vec;

use serde::Serialize;

use crate::error::Result;
use crate::exponents::ExponentSet;
use crate::geometry::Cylinder;
use crate::grid::{gradient, GridField};
use crate::math::{powf, sqrt};
use crate::quadrature::{integrate_spacetime, slice_integrals};
use crate::weight::Weight;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    /// `∬ |Dw|^p`.
    pub p_part: f64,
    /// `∬ a |Dw|^q`.
    pub q_part: f64,
    /// `max_j ∫ |w(·, t_j)|²`.
    pub l2_sup: f64,
    #[serde(rename = "total_P")]
    pub total_p: f64,
    #[serde(rename = "total_F")]
    pub total_f: f64,
}

/// `|ξ|^p + a |ξ|^q` for a coefficient value `a`.
#[inline]
pub fn integrand_value(a: f64, p: f64, q: f64, xi_norm: f64) -> f64 {
    powf(xi_norm, p) + a * powf(xi_norm, q)
}

/// `H(z, ξ)` with `|ξ| = xi_norm`.
pub fn integrand_h(weight: &Weight, exps: &ExponentSet, x: &[f64], t: f64, xi_norm: f64) -> f64 {
    integrand_value(weight.eval(x, t), exps.p(), exps.q(), xi_norm)
}

/// `a_h(z) = inf_{Q_h(z)} a`.
pub fn shifted_weight(weight: &Weight, h: f64, x: &[f64], t: f64) -> Result<f64> {
    weight.shifted(x, t, h)
}

/// `H_h(z, ξ)`.
pub fn shifted_integrand(
    weight: &Weight,
    exps: &ExponentSet,
    h: f64,
    x: &[f64],
    t: f64,
    xi_norm: f64,
) -> Result<f64> {
    Ok(integrand_value(weight.shifted(x, t, h)?, exps.p(), exps.q(), xi_norm))
}

/// `𝓟(w, Q)`. The gradient is taken on `w`'s whole grid and the integral runs
/// over the nodes of `Q`. `l2_sup` is left at zero, so `total_f == total_p`.
pub fn energy_p(w: &GridField, weight: &Weight, exps: &ExponentSet, q: &Cylinder) -> Result<EnergyBreakdown> {
    let win = w.window_for(q)?;
    let grad = gradient(w)?.restrict(&win)?.norm();
    let a = weight.field_on(&grad)?;
    energy_parts(&grad, &a, exps)
}

/// `𝓕(w, Q)` with every field of the breakdown filled in.
pub fn energy_f(w: &GridField, weight: &Weight, exps: &ExponentSet, q: &Cylinder) -> Result<EnergyBreakdown> {
    let mut e = energy_p(w, weight, exps, q)?;
    let win = w.window_for(q)?;
    e.l2_sup = l2_sup(&w.restrict(&win)?);
    e.total_f = e.l2_sup + e.total_p;
    Ok(e)
}

/// `p_part`, `q_part` and `total_p` from nodal `|Dw|` and `a` on one grid.
pub fn energy_parts(grad_norm: &GridField, a: &GridField, exps: &ExponentSet) -> Result<EnergyBreakdown> {
    let (p, q) = (exps.p(), exps.q());
    let p_field = grad_norm.map(|g| powf(g, p));
    let q_field = grad_norm.zip_map(a, |g, a| a * powf(g, q))?;
    let p_part = integrate_spacetime(&p_field);
    let q_part = integrate_spacetime(&q_field);
    Ok(EnergyBreakdown {
        p_part,
        q_part,
        l2_sup: 0.0,
        total_p: p_part + q_part,
        total_f: p_part + q_part,
    })
}

/// `max_j ∫ |w(·, t_j)|² dx` over the grid's time slices.
pub fn l2_sup(w: &GridField) -> f64 {
    slice_integrals(&w.map(|v| v * v)).into_iter().fold(0.0, f64::max)
}

/// `(∬_Q |w|^p + |Dw|^p)^{1/p}`.
pub fn norm_lp_w1p(w: &GridField, p: f64, q: &Cylinder) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(crate::Error::InvalidArgument(alloc::format!("need p >= 1, got {p}")));
    }
    let win = w.window_for(q)?;
    let grad = gradient(w)?.restrict(&win)?.norm();
    let inner = w.restrict(&win)?;
    Ok(lp_w1p_from_parts(&inner, &grad, p)?)
}

pub(crate) fn lp_w1p_from_parts(w: &GridField, grad_norm: &GridField, p: f64) -> Result<f64> {
    let f = w.zip_map(grad_norm, |v, g| powf(crate::math::abs(v), p) + powf(g, p))?;
    Ok(powf(integrate_spacetime(&f), 1.0 / p))
}

/// `max_j ‖w(·, t_j)‖_{L²(B)}` over the nodes of `Q`.
pub fn norm_c_l2(w: &GridField, q: &Cylinder) -> Result<f64> {
    let win = w.window_for(q)?;
    Ok(c_l2(&w.restrict(&win)?))
}

pub(crate) fn c_l2(w: &GridField) -> f64 {
    sqrt(l2_sup(w))
}

/// Spatial `L²` norm of every time slice.
pub fn slice_l2_norms(w: &GridField) -> Vec<f64> {
    slice_integrals(&w.map(|v| v * v)).into_iter().map(sqrt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exps(p: f64, q: f64) -> ExponentSet {
        ExponentSet::new(1, p, q, 1.0).unwrap()
    }

    #[test]
    fn integrand_examples() {
        let zero = Weight::constant(0.0).unwrap();
        let one = Weight::constant(1.0).unwrap();
        assert_eq!(integrand_h(&zero, &exps(2.0, 3.0), &[0.0], 0.0, 3.0), 9.0);
        assert_eq!(integrand_h(&one, &exps(2.0, 3.0), &[0.0], 0.0, 2.0), 12.0);
        assert_eq!(integrand_h(&one, &exps(2.0, 3.0), &[0.0], 0.0, 0.0), 0.0);
    }

    #[test]
    fn affine_field_energy_is_measure() {
        let q = Cylinder::centered(2, 0.5, 0.0, 2.0).unwrap();
        let w = GridField::from_fn(q.clone(), 9, 5, |x, _| x[0]).unwrap();
        let e = energy_p(&w, &Weight::constant(0.0).unwrap(), &ExponentSet::new(2, 2.0, 3.0, 1.0).unwrap(), &q).unwrap();
        assert!((e.total_p - q.measure()).abs() < 1e-13);
        let e = energy_p(&w, &Weight::constant(0.7).unwrap(), &ExponentSet::new(2, 3.0, 4.5, 1.0).unwrap(), &q).unwrap();
        assert!((e.total_p - 1.7 * q.measure()).abs() < 1e-12);
    }

    #[test]
    fn l2_sup_examples() {
        let b = Cylinder::centered(2, 0.5, 0.0, 1.0).unwrap();
        let k = GridField::constant(b.clone(), 5, 3, 3.0).unwrap();
        let e = energy_f(&k, &Weight::constant(1.0).unwrap(), &ExponentSet::new(2, 2.0, 3.0, 1.0).unwrap(), &b).unwrap();
        assert!((e.l2_sup - 9.0).abs() < 1e-13);
        assert!((e.total_f - 9.0 - e.total_p).abs() < 1e-13);
        let ramp = GridField::from_fn(b, 5, 11, |_, t| t).unwrap();
        assert!((l2_sup(&ramp) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn norms() {
        let q = Cylinder::centered(1, 1.0, 0.0, 1.0).unwrap();
        let z = GridField::constant(q.clone(), 5, 3, 0.0).unwrap();
        assert_eq!(norm_lp_w1p(&z, 2.0, &q).unwrap(), 0.0);
        assert_eq!(norm_c_l2(&z, &q).unwrap(), 0.0);
        let half = Cylinder::centered(1, 0.5, 0.0, 1.0).unwrap();
        let one = GridField::constant(half.clone(), 5, 3, 1.0).unwrap();
        assert!((norm_lp_w1p(&one, 3.0, &half).unwrap() - 1.0).abs() < 1e-14);
        assert!((norm_c_l2(&one, &half).unwrap() - 1.0).abs() < 1e-14);
        // ∫∫ x² + 1 = 8/3, trapezoid error O(dx²)
        let x = GridField::from_fn(q.clone(), 401, 3, |x, _| x[0]).unwrap();
        let n = norm_lp_w1p(&x, 2.0, &q).unwrap();
        assert!((n * n - 8.0 / 3.0).abs() < 1e-4);
    }
}
