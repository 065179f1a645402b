use alloc::format;

use serde::Serialize;

use crate::error::{Error, Result};

/// The exponents `(n, p, q, α, s)` that govern growth and the gap bounds.
///
/// `s` is only used by the `s`-integrable regime; `f64::INFINITY` is accepted
/// and stands for the bounded limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentSet {
    n: usize,
    p: f64,
    q: f64,
    alpha: f64,
    s: Option<f64>,
}

impl ExponentSet {
    pub fn new(n: usize, p: f64, q: f64, alpha: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidExponents("n must be at least 1".into()));
        }
        if !(p >= 2.0) || !p.is_finite() {
            return Err(Error::InvalidExponents(format!("need p >= 2, got {p}")));
        }
        if !(q > p) || !q.is_finite() {
            return Err(Error::InvalidExponents(format!("need q > p, got p = {p}, q = {q}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidExponents(format!("need 0 < alpha <= 1, got {alpha}")));
        }
        Ok(Self { n, p, q, alpha, s: None })
    }

    pub fn with_s(mut self, s: f64) -> Result<Self> {
        if !(s >= 2.0) {
            return Err(Error::InvalidExponents(format!("need s >= 2, got {s}")));
        }
        self.s = Some(s);
        Ok(self)
    }

    /// Same set with a different `q` (validated).
    pub fn with_q(self, q: f64) -> Result<Self> {
        let out = Self::new(self.n, self.p, q, self.alpha)?;
        match self.s {
            Some(s) => out.with_s(s),
            None => Ok(out),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn s(&self) -> Option<f64> {
        self.s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ExponentSet::new(2, 2.0, 2.5, 1.0).is_ok());
        assert!(ExponentSet::new(0, 2.0, 2.5, 1.0).is_err());
        assert!(ExponentSet::new(2, 1.5, 2.5, 1.0).is_err());
        assert!(ExponentSet::new(2, 2.0, 2.0, 1.0).is_err());
        assert!(ExponentSet::new(2, 2.0, 2.5, 0.0).is_err());
        assert!(ExponentSet::new(2, 2.0, 2.5, 1.5).is_err());
        let e = ExponentSet::new(2, 2.0, 2.5, 1.0).unwrap();
        assert!(e.with_s(1.0).is_err());
        assert_eq!(e.with_s(f64::INFINITY).unwrap().s(), Some(f64::INFINITY));
    }
}
