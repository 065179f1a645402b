//! Gap bounds on `q` for the three regimes and the matching blow-up exponents.
//!
//! | regime       | admissible `q`                              |
//! |--------------|---------------------------------------------|
//! | general      | `q ≤ p + pα/(n+2)`                          |
//! | bounded      | `q ≤ p + max{pα/(n+2), α}`                  |
//! | s-integrable | `q ≤ p + max{sα/(n+s), pα/(n+2)}`           |
//!
//! All inequalities are non-strict; margins carry no slack.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExponentSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    General,
    Bounded,
    SIntegrable,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::General, Regime::Bounded, Regime::SIntegrable];

    pub fn name(self) -> &'static str {
        match self {
            Regime::General => "general",
            Regime::Bounded => "bounded",
            Regime::SIntegrable => "s-integrable",
        }
    }
}

/// Which term of the bound is in force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `pα/(n+2)`.
    General,
    /// `α`.
    Alpha,
    /// `sα/(n+s)`.
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapVerdict {
    pub regime: Regime,
    /// Largest admissible `q`.
    pub bound: f64,
    /// `bound - q`.
    pub margin: f64,
    pub active_branch: Branch,
    /// Both terms of the max coincide.
    pub tie: bool,
    pub satisfied: bool,
    /// `pn/(n - p + 2)`: for `s` at or above it the `s`-term wins. Only set in
    /// the `s`-integrable regime when `n + 2 > p`.
    pub crossover_s: Option<f64>,
}

fn general_term(e: &ExponentSet) -> f64 {
    e.p() * e.alpha() / (e.n() as f64 + 2.0)
}

fn verdict(regime: Regime, e: &ExponentSet, term: f64, branch: Branch, tie: bool, crossover_s: Option<f64>) -> GapVerdict {
    let bound = e.p() + term;
    let margin = bound - e.q();
    GapVerdict { regime, bound, margin, active_branch: branch, tie, satisfied: margin >= 0.0, crossover_s }
}

pub fn gap_general(e: &ExponentSet) -> GapVerdict {
    verdict(Regime::General, e, general_term(e), Branch::General, false, None)
}

/// `pα/(n+2) ≤ α` exactly when `p ≤ n + 2`; ties go to the `α` branch. The
/// bound is the larger of the two computed terms, so it never drops below the
/// general bound by rounding.
pub fn gap_bounded(e: &ExponentSet) -> GapVerdict {
    let n2 = e.n() as f64 + 2.0;
    let term = general_term(e).max(e.alpha());
    if e.p() > n2 {
        verdict(Regime::Bounded, e, term, Branch::General, false, None)
    } else {
        verdict(Regime::Bounded, e, term, Branch::Alpha, e.p() == n2, None)
    }
}

/// `sα/(n+s) ≥ pα/(n+2)` exactly when `s(n+2) ≥ p(n+s)`; ties go to the
/// `s` branch. `s = ∞` is the bounded limit and selects the `α` term.
pub fn gap_s(e: &ExponentSet) -> Result<GapVerdict> {
    let s = e.s().ok_or(Error::MissingS)?;
    let n = e.n() as f64;
    let p = e.p();
    let crossover = if n + 2.0 > p { Some(p * n / (n + 2.0 - p)) } else { None };
    if s.is_infinite() {
        let term = general_term(e).max(e.alpha());
        let v = if p > n + 2.0 {
            verdict(Regime::SIntegrable, e, term, Branch::General, false, crossover)
        } else {
            verdict(Regime::SIntegrable, e, term, Branch::Alpha, p == n + 2.0, crossover)
        };
        return Ok(v);
    }
    let term = general_term(e).max(s * e.alpha() / (n + s));
    let lhs = s * (n + 2.0);
    let rhs = p * (n + s);
    if lhs >= rhs {
        Ok(verdict(Regime::SIntegrable, e, term, Branch::S, lhs == rhs, crossover))
    } else {
        Ok(verdict(Regime::SIntegrable, e, term, Branch::General, false, crossover))
    }
}

pub fn gap(regime: Regime, e: &ExponentSet) -> Result<GapVerdict> {
    match regime {
        Regime::General => Ok(gap_general(e)),
        Regime::Bounded => Ok(gap_bounded(e)),
        Regime::SIntegrable => gap_s(e),
    }
}

/// The exponent `e` of `h^e` in the regime's `(⋆)` prefactor:
///
/// ```text
/// α - (n+2)(q-p)/p     pα/(n+2) branch
/// α - (q-p)            α branch
/// α - (n+s)(q-p)/s     sα/(n+s) branch
/// ```
///
/// The branch is the active one of the regime's bound (so a bounded regime with
/// `p > n + 2` uses the first line). Each line equals a positive factor times
/// the verdict's margin, and is evaluated that way, so `e ≥ 0` holds exactly
/// when the verdict is satisfied.
pub fn blowup_exponent(regime: Regime, e: &ExponentSet) -> Result<f64> {
    let v = gap(regime, e)?;
    let n = e.n() as f64;
    let factor = match v.active_branch {
        Branch::General => (n + 2.0) / e.p(),
        Branch::Alpha => 1.0,
        Branch::S => {
            let s = e.s().ok_or(Error::MissingS)?;
            (n + s) / s
        }
    };
    let x = factor * v.margin;
    if v.margin < 0.0 && !(x < 0.0) {
        return Ok(-f64::MIN_POSITIVE);
    }
    Ok(x)
}
